"""Builds a tiny invented askubuntu-flavored corpus for the other demos.

Run directly to write Posts.xml / PostLinks.xml under demos/workspace/dump,
or import toy_corpus() / write_toy_dump() from the sibling scripts.
"""

from datetime import datetime, timezone
from pathlib import Path
from xml.sax.saxutils import quoteattr

from duptriage.corpus import DuplicatePair, QuestionRecord, format_timestamp, preprocess_text

UTC = timezone.utc

# (topic tags, question seeds). Each seed is (title, body); the first entry of
# a topic acts as the well-answered master the later rephrasings point at.
_TOPICS = [
    (
        ("boot", "grub2"),
        [
            ("grub rescue prompt after windows update", "boot drops to grub rescue prompt and windows update broke the grub bootloader config"),
            ("grub menu missing after installing windows", "after installing windows the grub menu never shows and boot goes straight to windows"),
            ("boot stuck at grub rescue", "machine boots to grub rescue after a windows update replaced the bootloader"),
            ("change grub default boot entry", "want the grub menu to pick the second boot entry by default"),
            ("grub timeout too short", "the grub menu flashes by and the timeout is too short to pick a kernel"),
        ],
    ),
    (
        ("networking", "wireless"),
        [
            ("wifi keeps disconnecting every few minutes", "the wireless connection drops every few minutes and reconnects by itself"),
            ("wireless drops randomly until reboot", "wifi disconnects at random and only a reboot brings the wireless back"),
            ("intermittent wifi disconnects on laptop", "laptop wireless keeps disconnecting every few minutes no matter the router"),
            ("no wifi networks listed after suspend", "after suspend the wireless card sees no networks until the driver reloads"),
            ("ethernet works but wifi cannot connect", "wired networking is fine but the wireless fails to connect to any network"),
        ],
    ),
    (
        ("drivers", "nvidia"),
        [
            ("black screen after nvidia driver install", "installing the nvidia driver leaves a black screen at boot instead of the login screen"),
            ("login screen black after installing nvidia", "after the nvidia driver install the machine shows a black screen where the login should be"),
            ("nvidia driver black screen on boot", "boot ends in a black screen since installing the proprietary nvidia driver"),
            ("switch between nvidia and nouveau", "how to switch the graphics driver between nvidia and nouveau cleanly"),
            ("nvidia settings shows wrong resolution", "nvidia settings lists a wrong screen resolution after a driver upgrade"),
        ],
    ),
    (
        ("apt", "upgrade"),
        [
            ("apt held broken packages on upgrade", "apt reports held broken packages and refuses the release upgrade"),
            ("release upgrade fails with broken packages", "upgrade aborts because apt says some broken packages are held"),
            ("cannot upgrade apt says packages held back", "running the upgrade apt keeps saying packages have been held back"),
            ("remove unused kernels to free boot space", "boot partition is full of old kernels and apt cannot upgrade"),
            ("apt update slow on mirror", "apt update crawls on the default mirror and picking a faster mirror"),
        ],
    ),
]

# a third tag on a few questions bridges the topics so the graph connects
_EXTRA_TAGS = {
    (0, 4): ("kernel",),
    (3, 3): ("kernel",),
    (1, 3): ("drivers",),
}

# the 2020 anchors post at different points of the year so their
# confirmation gaps spread from weeks to most of a year
_ANCHOR_DATES = {
    (0, 2): datetime(2020, 6, 4, 14, 30, 0, tzinfo=UTC),
    (1, 2): datetime(2020, 10, 5, 14, 30, 0, tzinfo=UTC),
    (2, 2): datetime(2020, 1, 7, 14, 30, 0, tzinfo=UTC),
}

# duplicate pairs: (topic, later seed index, linked year). Link times put six
# pairs in the training window, one in validation, three in the test window.
_PAIRS = [
    (0, 1, datetime(2013, 4, 2, 11, 5, 0, tzinfo=UTC)),
    (0, 2, datetime(2020, 11, 3, 9, 30, 0, tzinfo=UTC)),
    (1, 1, datetime(2014, 7, 19, 8, 0, 30, tzinfo=UTC)),
    (1, 2, datetime(2020, 10, 21, 22, 10, 0, tzinfo=UTC)),
    (2, 1, datetime(2016, 2, 11, 16, 45, 10, tzinfo=UTC)),
    (2, 2, datetime(2020, 12, 5, 13, 20, 40, tzinfo=UTC)),
    (3, 1, datetime(2017, 9, 30, 6, 25, 50, tzinfo=UTC)),
    (3, 2, datetime(2019, 11, 14, 18, 55, 5, tzinfo=UTC)),
    (1, 3, datetime(2015, 5, 8, 12, 0, 0, tzinfo=UTC)),
    (2, 3, datetime(2018, 3, 27, 20, 40, 20, tzinfo=UTC)),
]


def toy_corpus() -> tuple[list[QuestionRecord], list[DuplicatePair]]:
    records = []
    by_seed = {}
    qid = 100
    for topic, (tags, seeds) in enumerate(_TOPICS):
        for index, (title, body) in enumerate(seeds):
            # masters sit in 2012, rephrasings arrive over later years; the
            # seeds linked in the test window get 2020 anchors
            if index == 0:
                created = datetime(2012, 3 + topic, 10, 9, 0, 0, tzinfo=UTC)
            elif (topic, index) in _ANCHOR_DATES:
                created = _ANCHOR_DATES[(topic, index)]
            else:
                linked = [d for t, i, d in _PAIRS if t == topic and i == index]
                # anchors go up each January, well before their link date
                year = linked[0].year if linked else 2013 + index
                created = datetime(year, 1, 4 + topic + index, 14, 30, 0, tzinfo=UTC)
            records.append(
                QuestionRecord(
                    id=qid,
                    title_raw=title,
                    body_raw=body,
                    title_tokens=tuple(preprocess_text(title)),
                    body_tokens=tuple(preprocess_text(body)),
                    tags=tags + _EXTRA_TAGS.get((topic, index), ()),
                    created_at=created,
                    answer_count=3 if index == 0 else 1,
                )
            )
            by_seed[(topic, index)] = qid
            qid += 1
    pairs = [
        DuplicatePair(anchor=by_seed[(t, i)], master=by_seed[(t, 0)], linked_at=linked)
        for t, i, linked in _PAIRS
    ]
    return records, pairs


def write_toy_dump(dump_dir: Path) -> None:
    records, pairs = toy_corpus()
    dump_dir.mkdir(parents=True, exist_ok=True)
    lines = ['<?xml version="1.0" encoding="utf-8"?>', "<posts>"]
    answer_id = 90000
    for r in records:
        lines.append(
            f'  <row Id="{r.id}" PostTypeId="1" CreationDate="{format_timestamp(r.created_at)}" '
            f"Title={quoteattr(r.title_raw)} Body={quoteattr('<p>' + r.body_raw + '</p>')} "
            f"Tags={quoteattr(''.join(f'<{t}>' for t in r.tags))} />"
        )
        for _ in range(r.answer_count):
            lines.append(
                f'  <row Id="{answer_id}" PostTypeId="2" ParentId="{r.id}" '
                f'CreationDate="{format_timestamp(r.created_at)}" Body="an answer" />'
            )
            answer_id += 1
    lines.append("</posts>")
    (dump_dir / "Posts.xml").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ['<?xml version="1.0" encoding="utf-8"?>', "<postlinks>"]
    for i, p in enumerate(pairs, start=1):
        lines.append(
            f'  <row Id="{i}" CreationDate="{format_timestamp(p.linked_at)}" '
            f'PostId="{p.anchor}" RelatedPostId="{p.master}" LinkTypeId="3" />'
        )
    lines.append("</postlinks>")
    (dump_dir / "PostLinks.xml").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    target = Path(__file__).parent / "workspace" / "dump"
    write_toy_dump(target)
    records, pairs = toy_corpus()
    print(f"wrote {len(records)} questions and {len(pairs)} duplicate links to {target}")
