"""Shared fixture builders: Java-ish sources, posts dumps, corpus trees.

The planted workspace is the one hand-built end-to-end fixture; everything
about it (spans, salts, header choices) is deliberate, so tests can pin
exact pair ids. Salting every identifier with a per-plant prefix keeps
unrelated fragments far below the token similarity threshold.
"""

from __future__ import annotations

import random
import shutil
from collections import Counter
from pathlib import Path
from xml.sax.saxutils import quoteattr

from cloneaudit.ingest import NormalizedSource
from cloneaudit.lexer import BlockFragment

# --------------------------------------------------------------- plants

# type-1 plant, 17 normalized lines (sig + 15 + close), salt "rc"
PLANT1 = [
    "public static long encodeRegionChecksum(long[] spans, int seed) {",
    "    long checksum = seed * 31L;",
    "    int cursor = 0;",
    "    long carry = 7L;",
    "    while (cursor < spans.length) {",
    "        checksum += spans[cursor] * carry;",
    "        carry = (carry << 3) ^ cursor;",
    "        if (carry > 0x7fffL) {",
    "            carry = carry % 9973L;",
    "        }",
    "        checksum ^= carry >>> 2;",
    "        cursor++;",
    "    }",
    "    long tail = checksum % 4096L;",
    "    checksum = (checksum << 5) | tail;",
    "    return checksum - seed;",
    "}",
]

# type-2 plant, 10 normalized lines; the snippet renames columnTotal
PLANT2 = [
    "public static int mergeSparseColumns(int[][] grid) {",
    "    int columnTotal = 0;",
    "    int sparseCount = grid.length;",
    "    for (int row = 0; row < sparseCount; row++) {",
    "        columnTotal += grid[row][0];",
    "        sparseCount -= grid[row].length % 3;",
    "        columnTotal ^= sparseCount << 1;",
    "    }",
    "    return columnTotal + sparseCount;",
    "}",
]

PLANT2_RENAMED = [line.replace("columnTotal", "rowTotal") for line in PLANT2]

# brace-free statement streak, 10 lines, shared verbatim by two hosts
STREAK = [
    "int stId = stSeed % 97;",
    "long stMask = 0xff00ff00L;",
    "stBucket.clear();",
    'stBucket.add("st-first");',
    "stMask ^= stId * 5L;",
    "stId = (stId + 13) % 31;",
    'stBucket.add("st-mid-" + stId);',
    "stMask = stMask >>> 3;",
    "stTally += stMask & 0x3fL;",
    'stBucket.add("st-last");',
]

# type-1 plant below every threshold: 9 normalized lines
PLANT4 = [
    "public static int foldHeaderBits(int word) {",
    "    int folded = word ^ 0x5a5a;",
    "    folded = (folded >>> 4) | (folded << 28);",
    "    folded += 0x1f2e3d4c;",
    "    folded ^= word >>> 9;",
    "    folded = ~folded + 0x41;",
    "    folded ^= folded >>> 16;",
    "    return folded & 0xffff;",
    "}",
]


def filler_method(salt: str, body_lines: int, name: str | None = None) -> list[str]:
    """A method whose every identifier and literal carries `salt`, so it
    cannot token-match anything built with a different salt."""
    name = name or f"{salt}Compute"
    out = [f"public static int {name}(int {salt}In) {{"]
    out.append(f"    int {salt}Acc = {salt}In * 3;")
    templates = (
        "    {s}Acc += {s}In % {k};",
        "    {s}Acc = ({s}Acc << 1) ^ {k};",
        "    {s}Acc -= {s}In / {k};",
        '    String {s}Tag{k} = "{s}-step-{k}";',
        "    {s}Acc ^= {s}Tag{j}.length() + {k};",
    )
    for k in range(body_lines - 2):
        template = templates[k % len(templates)]
        out.append(template.format(s=salt, k=k + 11, j=k + 10))
    out.append(f"    return {salt}Acc;")
    out.append("}")
    return out


def indent(lines: list[str], by: str = "    ") -> list[str]:
    return [by + line if line else line for line in lines]


# --------------------------------------------------------------- headers

HEADERS = {
    "Apache-2": (
        "/*\n"
        " * Licensed under the Apache License, Version 2.0 (the \"License\");\n"
        " * you may not use this file except in compliance with the License.\n"
        " * You may obtain a copy of the License at\n"
        " *\n"
        " *     http://www.apache.org/licenses/LICENSE-2.0\n"
        " */\n"
    ),
    "AGPLv3": (
        "/*\n"
        " * This program is free software: you can redistribute it under the\n"
        " * terms of the GNU Affero General Public License, version 3.\n"
        " */\n"
    ),
    "AGPLv3+": (
        "/*\n"
        " * This program is free software: you can redistribute it and/or modify\n"
        " * it under the terms of the GNU Affero General Public License as\n"
        " * published by the Free Software Foundation, either version 3 of the\n"
        " * License, or (at your option) any later version.\n"
        " */\n"
    ),
    "GPLv3+": (
        "/*\n"
        " * This program is free software; you can redistribute it and/or modify\n"
        " * it under the terms of the GNU General Public License as published by\n"
        " * the Free Software Foundation; either version 3 of the License, or\n"
        " * (at your option) any later version.\n"
        " */\n"
    ),
    "GPLv2+": (
        "/*\n"
        " * This program is free software; you can redistribute it and/or modify\n"
        " * it under the terms of the GNU General Public License as published by\n"
        " * the Free Software Foundation; either version 2 of the License, or\n"
        " * (at your option) any later version.\n"
        " */\n"
    ),
    "GPLv2": (
        "/*\n"
        " * This program is distributed under the terms of the\n"
        " * GNU General Public License, version 2, as published by the\n"
        " * Free Software Foundation.\n"
        " */\n"
    ),
    "LesserGPLv3+": (
        "/*\n"
        " * This library is free software; you can redistribute it and/or modify\n"
        " * it under the terms of the GNU Lesser General Public License as\n"
        " * published by the Free Software Foundation; either version 3 of the\n"
        " * License, or (at your option) any later version.\n"
        " */\n"
    ),
    "LesserGPLv2.1+": (
        "/*\n"
        " * This library is free software; you can redistribute it and/or modify\n"
        " * it under the terms of the GNU Lesser General Public License as\n"
        " * published by the Free Software Foundation; either version 2.1 of the\n"
        " * License, or (at your option) any later version.\n"
        " */\n"
    ),
    "MPLv1.1": (
        "/*\n"
        " * The contents of this file are subject to the Mozilla Public License\n"
        " * Version 1.1 (the \"License\"); you may not use this file except in\n"
        " * compliance with the License.\n"
        " */\n"
    ),
    "EPLv1": (
        "/*\n"
        " * All rights reserved. This program and the accompanying materials are\n"
        " * made available under the terms of the Eclipse Public License v1.0\n"
        " * which accompanies this distribution.\n"
        " */\n"
    ),
    "CDDL": (
        "/*\n"
        " * The contents of this file are subject to the terms of the Common\n"
        " * Development and Distribution License (the \"License\"). You may not\n"
        " * use this file except in compliance with the License.\n"
        " */\n"
    ),
    "NewBSD3": (
        "/*\n"
        " * This file is distributed under the New BSD License.\n"
        " * See the project documentation for the full text.\n"
        " */\n"
    ),
    "BSD3": (
        "/*\n"
        " * Redistribution and use in source and binary forms, with or without\n"
        " * modification, are permitted provided that the following conditions\n"
        " * are met: ... Neither the name of the copyright holder nor the names\n"
        " * of its contributors may be used to endorse or promote products\n"
        " * derived from this software without specific prior written permission.\n"
        " */\n"
    ),
    "BSD2": (
        "/*\n"
        " * Redistribution and use in source and binary forms, with or without\n"
        " * modification, are permitted provided that redistributions in binary\n"
        " * form reproduce this notice in the documentation and/or other\n"
        " * materials provided with the distribution.\n"
        " */\n"
    ),
    "CC-BY-SA-3.0": (
        "// This work is licensed under the Creative Commons\n"
        "// Attribution-ShareAlike 3.0 Unported License.\n"
    ),
    "SunMicrosystems": (
        "/*\n"
        " * Copyright 2004 Sun Microsystems, Inc. All rights reserved.\n"
        " * Use is subject to license terms.\n"
        " */\n"
    ),
    "Oracle": (
        "/*\n"
        " * Copyright (c) 2011, Oracle and/or its affiliates.\n"
        " * All rights reserved.\n"
        " */\n"
    ),
    "Proprietary": (
        "/*\n"
        " * This software is proprietary and confidential. Unauthorized copying\n"
        " * of this file, via any medium, is strictly prohibited.\n"
        " */\n"
    ),
    # no catalog entry matches: identification falls through to Unknown
    "Unknown": "// Copyright (c) 2011 Acme Widgets.\n",
    # redirection marker: the terms live in a neighboring file
    "SeeFile": "// See the LICENSE file for details.\n",
}


# ----------------------------------------------------------------- dump


def question_row(post_id: int, accepted: int | None, tags=("java",),
                 body: str = "<p>How should this be done?</p>") -> str:
    attrs = {
        "Id": str(post_id),
        "PostTypeId": "1",
        "CreationDate": "2015-01-05T09:00:00.000",
        "Tags": "".join(f"<{t}>" for t in tags),
        "Body": body,
    }
    if accepted is not None:
        attrs["AcceptedAnswerId"] = str(accepted)
    return _row(attrs)


def answer_row(post_id: int, parent: int, code_blocks: list[str],
               creation: str = "2015-06-01T10:00:00.000",
               prose: str = "Use the helper below.") -> str:
    import html

    body = f"<p>{prose}</p>"
    for code in code_blocks:
        body += f"\n<pre><code>{html.escape(code)}</code></pre>"
    attrs = {
        "Id": str(post_id),
        "PostTypeId": "2",
        "ParentId": str(parent),
        "CreationDate": creation,
        "Score": "3",
        "Body": body,
    }
    return _row(attrs)


def _row(attrs: dict) -> str:
    inner = " ".join(f"{k}={quoteattr(v)}" for k, v in attrs.items())
    return f"  <row {inner} />"


def write_dump(path: Path, rows: list[str]) -> Path:
    text = '<?xml version="1.0" encoding="utf-8"?>\n<posts>\n'
    text += "\n".join(rows)
    text += "\n</posts>\n"
    path.write_text(text, encoding="utf-8")
    return path


def write_tree(root: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        full = root / rel
        full.parent.mkdir(parents=True, exist_ok=True)
        full.write_text(text, encoding="utf-8")
    return root


# -------------------------------------------------------- the workspace

CORPUS_NAME = "acme-core"
RELEASE_DATE = "2013-09-01"

# snippet texts, keyed by the ids ingest will assign
SNIPPET_TYPE1 = "\n".join(["public class RegionCodec {"] + indent(PLANT1) + ["}"])
SNIPPET_TYPE2 = "\n".join(PLANT2_RENAMED)
SNIPPET_LINE = "\n".join(
    ["public class StreamStats {"]
    + indent(
        ["public long collectStreamStats(int stSeed, java.util.List<String> stBucket) {"]
        + indent(
            [
                "long stTally = 0L;",
                "int snapWindow = stSeed + 11;",
                "long snapGauge = snapWindow * 3L;",
                'String snapLabel = "sn-metrics";',
            ]
            + STREAK
            + [
                "snapGauge += stTally * snapWindow;",
                "snapLabel = snapLabel + snapGauge;",
                "stTally -= snapGauge % 17;",
                "snapWindow = snapWindow / 2;",
                "snapGauge ^= stTally;",
                "stTally += snapWindow;",
                "return stTally + snapGauge;",
            ]
        )
        + ["}"]
    )
    + ["}"]
)
SNIPPET_NINE = "\n".join(PLANT4 + ["// compact header fold"])

# pinned spans inside the snippets (1-based, inclusive)
TYPE1_SNIPPET_SPAN = (1, 19)  # whole wrapper class; plant occupies 2-18
LINE_SNIPPET_RUN = (7, 16)  # the streak inside SNIPPET_LINE
TYPE2_SNIPPET_SPAN = (1, 10)

TYPE1_PAIR_ID = "101_1:1-19"
TYPE2_PAIR_ID = "201_1:1-10"
LINE_PAIR_ID = "301_1:7-16"

ALPHA = "src/com/acme/codec/Alpha.java"
BETA = "src/com/acme/codec/Beta.java"
GAMMA = "src/com/acme/table/Gamma.java"
DELTA = "src/com/acme/net/Delta.java"
EPSILON = "src/com/acme/fmt/Epsilon.java"

# plant locations inside the corpus files (original line numbers)
ALPHA_PLANT_SPAN = (11, 27)
BETA_PLANT_SPAN = (11, 27)
DELTA_STREAK_SPAN = (12, 21)


def _corpus_file(header: str | None, package: str, class_name: str,
                 members: list[list[str]]) -> str:
    parts = []
    if header:
        parts.append(header.rstrip("\n"))
    parts.append(f"package {package};")
    parts.append("")
    parts.append(f"public class {class_name} {{")
    for i, member in enumerate(members):
        if i:
            parts.append("")
        parts.extend(indent(member))
    parts.append("}")
    return "\n".join(parts) + "\n"


def _delta_text() -> str:
    method = (
        ["private long appendChannelDigest(int stSeed, java.util.List<String> stBucket) {"]
        + indent(
            [
                "long stTally = 1L;",
                "long dlGauge = dlScale * stSeed;",
                "int dlHop = stSeed % 5;",
                'String dlTag = "dl-chan";',
                "int dlSpin = dlHop + 7;",
            ]
            + STREAK
            + [
                "dlGauge ^= stTally << 2;",
                "dlTag = dlTag + dlHop;",
                "dlSpin = dlSpin * 3;",
                "stTally += dlGauge % 23;",
                "dlScale = dlScale + dlSpin;",
                "return stTally ^ dlGauge;",
            ]
        )
        + ["}"]
    )
    lines = ["package com.acme.net;", "", "public class Delta {",
             "    private long dlScale = 4L;", ""]
    lines += indent(method)
    lines += ["}"]
    return "\n".join(lines) + "\n"


def corpus_files() -> dict[str, str]:
    return {
        ALPHA: _corpus_file(
            HEADERS["Apache-2"], "com.acme.codec", "Alpha",
            [PLANT1, filler_method("pa", 5, "paOffset")],
        ),
        BETA: _corpus_file(
            HEADERS["Apache-2"], "com.acme.codec", "Beta",
            [PLANT1, filler_method("pb", 5, "pbOffset")],
        ),
        GAMMA: _corpus_file(
            HEADERS["NewBSD3"], "com.acme.table", "Gamma",
            [PLANT2, filler_method("pg", 14, "pgShuffle")],
        ),
        DELTA: _delta_text(),
        EPSILON: _corpus_file(
            HEADERS["GPLv2"], "com.acme.fmt", "Epsilon",
            [PLANT4, filler_method("pe", 25, "peRender")],
        ),
        "src/com/acme/misc/Foxtrot.java": _corpus_file(
            HEADERS["LesserGPLv2.1+"], "com.acme.misc", "Foxtrot",
            [filler_method("fx", 12)],
        ),
        "src/com/acme/misc/Golf.java": _corpus_file(
            HEADERS["EPLv1"], "com.acme.misc", "Golf", [filler_method("gf", 10)],
        ),
        "src/com/acme/misc/Hotel.java": _corpus_file(
            HEADERS["SeeFile"], "com.acme.misc", "Hotel", [filler_method("ht", 9)],
        ),
        "src/com/acme/misc/India.java": _corpus_file(
            HEADERS["Unknown"], "com.acme.misc", "India", [filler_method("iv", 11)],
        ),
        "src/com/acme/misc/Juliet.java": _corpus_file(
            None, "com.acme.misc", "Juliet", [filler_method("jl", 13)],
        ),
    }


def latest_files() -> dict[str, str]:
    """Release tree evolved: Alpha gains one statement inside the plant,
    Gamma's plant body is replaced by delegation, Delta is gone."""
    files = dict(corpus_files())
    del files[DELTA]
    plant1_latest = PLANT1[:6] + ["    checksum &= 0x0fffffffffffffffL;"] + PLANT1[6:]
    files[ALPHA] = _corpus_file(
        HEADERS["Apache-2"], "com.acme.codec", "Alpha",
        [plant1_latest, filler_method("pa", 5, "paOffset")],
    )
    plant2_latest = [
        PLANT2[0],
        "    return SparseKernel.mergeColumns(grid);",
        "}",
    ]
    files[GAMMA] = _corpus_file(
        HEADERS["NewBSD3"], "com.acme.table", "Gamma",
        [plant2_latest, filler_method("pg", 14, "pgShuffle")],
    )
    return files


def dump_rows() -> list[str]:
    filler = {
        601: filler_method("qf", 10),
        701: filler_method("qg", 12),
        801: filler_method("qh", 11),
        901: filler_method("qj", 14),
    }
    rows = [
        question_row(100, 101, tags=("java", "checksum")),
        answer_row(101, 100, [SNIPPET_TYPE1], creation="2015-09-14T10:26:00.000",
                   prose="The RegionCodec checksum helper handles spans directly."),
        question_row(200, 201),
        answer_row(201, 200, [SNIPPET_TYPE2], creation="2014-03-02T08:00:00.000"),
        question_row(300, 301),
        answer_row(301, 300, [SNIPPET_LINE], creation="2015-01-20T12:00:00.000"),
        question_row(400, 401),
        answer_row(401, 400, [SNIPPET_NINE], creation="2015-02-11T09:30:00.000"),
        # one answer carrying two blocks, to pin snippet ordinal ids
        question_row(500, 501),
        answer_row(
            501, 500,
            ["\n".join(filler_method("qa", 10)), "\n".join(filler_method("qb", 11))],
        ),
        question_row(600, 601),
        answer_row(601, 600, ["\n".join(filler[601])]),
        question_row(700, 701),
        answer_row(701, 700, ["\n".join(filler[701])]),
        question_row(800, 801),
        answer_row(801, 800, ["\n".join(filler[801])]),
        question_row(900, 901),
        answer_row(901, 900, ["\n".join(filler[901])]),
        # noise the parser must shrug off
        question_row(950, 951, tags=("python",)),
        answer_row(951, 950, ["\n".join(filler_method("nq", 10))]),
        question_row(960, None),
        answer_row(961, 960, ["print()"]),
        '  <row Id="970" PostTypeId="7" Body="wiki" />',
        '  <row Id="not-a-number" PostTypeId="2" Body="zz" />',
    ]
    return rows


EXPECTED_SNIPPET_IDS = [
    "101_1", "201_1", "301_1", "401_1", "501_1", "501_2",
    "601_1", "701_1", "801_1", "901_1",
]


def build_workspace(root: Path) -> dict:
    """Write the fixture dump, corpus, latest tree, intents, and config."""
    root.mkdir(parents=True, exist_ok=True)
    write_dump(root / "Posts.xml", dump_rows())
    write_tree(root / "corpus" / CORPUS_NAME, corpus_files())
    write_tree(root / "latest" / CORPUS_NAME, latest_files())
    (root / "intents.jsonl").write_text(
        '{"pair_id": "%s", "intent": "Bug", "issue_id": "ACME-311"}\n' % TYPE1_PAIR_ID,
        encoding="utf-8",
    )
    (root / "config.toml").write_text(
        "out = \"artifacts\"\n"
        "\n"
        "[inputs]\n"
        "dump = \"Posts.xml\"\n"
        "intents = \"intents.jsonl\"\n"
        "\n"
        "[[inputs.corpus]]\n"
        f"name = \"{CORPUS_NAME}\"\n"
        f"root = \"corpus/{CORPUS_NAME}\"\n"
        "version = \"2013.09\"\n"
        f"release_date = {RELEASE_DATE}\n"
        "\n"
        "[inputs.latest]\n"
        f"\"{CORPUS_NAME}\" = \"latest/{CORPUS_NAME}\"\n"
        "\n"
        "[triage]\n"
        "reviewers = [\"rev-a\", \"rev-b\"]\n",
        encoding="utf-8",
    )
    return {
        "root": root,
        "config": root / "config.toml",
        "out": root / "artifacts",
        "dump": root / "Posts.xml",
        "corpus_root": root / "corpus" / CORPUS_NAME,
        "latest_root": root / "latest" / CORPUS_NAME,
    }


def clone_workspace(src_root: Path, dst_root: Path) -> dict:
    shutil.copytree(src_root, dst_root, ignore=shutil.ignore_patterns("artifacts"))
    return {
        "root": dst_root,
        "config": dst_root / "config.toml",
        "out": dst_root / "artifacts",
        "dump": dst_root / "Posts.xml",
        "corpus_root": dst_root / "corpus" / CORPUS_NAME,
        "latest_root": dst_root / "latest" / CORPUS_NAME,
    }


# ------------------------------------------------- synthetic detector data

# index-side rarity varies wildly so the prefix filter has real work to do
_VOCAB = (
    [f"common{i}" for i in range(8)]
    + [f"mid{i}" for i in range(24)]
    + [f"rare{i}" for i in range(120)]
)
_WEIGHTS = [60] * 8 + [12] * 24 + [1] * 120


def identity_source(unit_id: str, length: int) -> NormalizedSource:
    return NormalizedSource(unit_id, ("x",) * length, tuple(range(1, length + 1)))


def _random_bag(rng: random.Random, size: int) -> Counter:
    return Counter(rng.choices(_VOCAB, weights=_WEIGHTS, k=size))


def synth_fragments(
    rng: random.Random,
    unit_prefix: str,
    count: int,
    allow_empty: bool = False,
) -> tuple[list[BlockFragment], dict[str, NormalizedSource]]:
    """Random block fragments over single-fragment units with identity
    line maps; spans 6..30 so the min-line filter fires on both sides."""
    fragments: list[BlockFragment] = []
    sources: dict[str, NormalizedSource] = {}
    for i in range(count):
        unit = f"{unit_prefix}{i}"
        span = rng.randint(6, 30)
        start = rng.randint(1, 40)
        if allow_empty and rng.random() < 0.03:
            bag: Counter = Counter()
        else:
            bag = _random_bag(rng, rng.randint(8, 60))
        sources[unit] = identity_source(unit, start + span)
        fragments.append(BlockFragment(unit, start, end_line=start + span - 1,
                                       tokens=(), token_bag=bag))
    return fragments, sources


def boundary_pair(rng: random.Random, query_unit: str, index_unit: str,
                  exact: bool):
    """A query/index fragment pair whose similarity is exactly 0.8
    (overlap 16 of 20) or just under it (15 of 20)."""
    base = _random_bag(rng, 20)
    items = sorted(base.elements())
    rng.shuffle(items)
    keep = 16 if exact else 15
    bag = Counter(items[:keep])
    bag.update(f"fresh{query_unit}n{i}" for i in range(20 - keep))
    qfrag = BlockFragment(query_unit, 1, 12, tokens=(), token_bag=bag)
    ifrag = BlockFragment(index_unit, 3, 14, tokens=(), token_bag=base)
    return (
        qfrag,
        {query_unit: identity_source(query_unit, 12)},
        ifrag,
        {index_unit: identity_source(index_unit, 16)},
    )
