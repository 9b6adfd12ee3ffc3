"""Regenerate the bundled fixtures under src/tcsynth/data/.

The fixture fonts are procedural: each glyph is a handful of bars chosen
from the codepoint, so they are tiny, license-free, and cover a known
Traditional Chinese character set. They are not meant to look like real
type, only to exercise the rasterizer with real TrueType outlines.

    python tools/make_fixtures.py
"""

from __future__ import annotations

import hashlib
import random
from pathlib import Path

from fontTools.fontBuilder import FontBuilder
from fontTools.pens.ttGlyphPen import TTGlyphPen

DATA = Path(__file__).resolve().parents[1] / "src" / "tcsynth" / "data"

CHARS = (
    "台北市政府高雄新竹桃園臺中南投嘉義屏東宜蘭花蓮澎湖金門馬祖基隆"
    "中華民國人大學校醫院銀行郵局車站公園路街巷弄號樓店餐廳飯麵茶咖啡"
    "書館圖文化博物美術音樂電影劇場體育運動游泳球籃足網棒羽毛"
    "商業貿易金融保險證券投資理財信用卡存款貸利息匯率"
    "東西南北前後左右上下內外進出入口停車場禁止通行請勿吸菸"
    "春夏秋冬日月星雲風雨雪晴天氣溫度山川河湖海島林森樹木花草"
    "紅黃藍綠白黑灰紫橙粉色光明亮暗早晚午夜時間分秒年週"
    "一二三四五六七八九十百千萬億元角零整半雙單"
    "我你他她們的是在有不這那個來去說看聽讀寫想要會能做"
    "家庭父母兄弟姊妹子女朋友老師學生同事客戶"
    "手機電話腦網路資訊科技軟體硬系統程式設計開發測試"
    "食品水果蔬菜肉魚雞鴨牛豬羊米飯麵包蛋糕奶油糖鹽醬"
    "衣服褲鞋帽襪包傘眼鏡錶戒指項鍊"
    "愛心情快歡喜悲傷怒樂安靜和平自由幸福健康長壽"
    "開關門窗桌椅床燈廚房浴室客廳臥陽台"
    "藥局診所牙科眼耳鼻喉皮膚急救護理"
    "火災警察消防局法院區鄉鎮村里廣府縣"
    "特價優惠折扣免費新品限定熱賣招牌歡迎光臨營業中"
)

EXTRA_WORDS = ["台北市政府", "高雄", "台北", "新竹科學園區", "中華郵政"]


def _unique(chars: str) -> str:
    seen: dict[str, None] = {}
    for ch in chars:
        seen.setdefault(ch, None)
    return "".join(seen)


def _rect(pen: TTGlyphPen, x0: int, y0: int, x1: int, y1: int) -> None:
    # clockwise outer contour (TrueType convention)
    pen.moveTo((x0, y0))
    pen.lineTo((x0, y1))
    pen.lineTo((x1, y1))
    pen.lineTo((x1, y0))
    pen.closePath()


def _glyph(ch: str, style: int):
    h = hashlib.sha256(f"{style}:{ch}".encode()).digest()
    pen = TTGlyphPen(None)
    thick = 70 if style == 0 else 45
    lo, hi = 60, 900
    # a frame stroke so every glyph has ink, then hash-chosen bars
    _rect(pen, 100, lo, 100 + thick, hi - 40)
    for i in range(2 + h[0] % 4):
        b = h[1 + i]
        if b & 1:
            y = lo + (b * 3) % (hi - lo - thick)
            _rect(pen, 120, y, 880, y + thick)
        else:
            x = 150 + (b * 5) % (700 - thick)
            _rect(pen, x, lo + (b % 5) * 40, x + thick, hi - (b % 7) * 30)
    if style == 1:
        # serif-like foot
        _rect(pen, 60, lo, 300, lo + 30)
    return pen.glyph()


def build_font(path: Path, family: str, chars: str, style: int, with_ideo_space: bool) -> None:
    order = [".notdef"]
    cmap: dict[int, str] = {}
    glyphs = {".notdef": TTGlyphPen(None).glyph()}
    metrics = {".notdef": (1000, 0)}
    for ch in chars:
        name = f"uni{ord(ch):04X}"
        order.append(name)
        cmap[ord(ch)] = name
        glyphs[name] = _glyph(ch, style)
        metrics[name] = (1000, 60)
    if with_ideo_space:
        order.append("uni3000")
        cmap[0x3000] = "uni3000"
        glyphs["uni3000"] = TTGlyphPen(None).glyph()
        metrics["uni3000"] = (1000, 0)

    fb = FontBuilder(1000, isTTF=True)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    fb.setupGlyf(glyphs)
    fb.setupHorizontalMetrics(metrics)
    fb.setupHorizontalHeader(ascent=880, descent=-120)
    fb.setupNameTable({"familyName": family, "styleName": "Regular"})
    fb.setupOS2(sTypoAscender=880, sTypoDescender=-120, usWinAscent=880, usWinDescent=120)
    fb.setupPost()
    fb.save(str(path))


def build_words(chars: str, n: int = 1000, seed: int = 20210101) -> list[str]:
    rng = random.Random(seed)
    words: dict[str, None] = dict.fromkeys(EXTRA_WORDS)
    pool = list(chars)
    while len(words) < n:
        k = rng.choice([2, 2, 2, 3, 3, 4, 5])
        words.setdefault("".join(rng.choice(pool) for _ in range(k)), None)
    return list(words)


def main() -> None:
    chars = _unique(CHARS)
    fonts = DATA / "fonts"
    fonts.mkdir(parents=True, exist_ok=True)
    build_font(fonts / "FixtureSans.ttf", "Fixture Sans", chars, 0, with_ideo_space=True)
    build_font(fonts / "FixtureMing.ttf", "Fixture Ming", chars, 1, with_ideo_space=False)
    # covers only the first half, so some words need a specific font
    build_font(fonts / "FixturePartial.ttf", "Fixture Partial", chars[: len(chars) // 2], 0, with_ideo_space=False)
    words = build_words(chars)
    (DATA / "words_1000.txt").write_text("\n".join(words) + "\n", encoding="utf-8")
    print(f"{len(chars)} characters, {len(words)} words")


if __name__ == "__main__":
    main()
