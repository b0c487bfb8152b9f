#!/usr/bin/env python3
"""Emit src/arabic_compat_table.inc: NFKC replacements for Arabic-script codepoints.

Covers the Arabic, Arabic Supplement, Arabic Extended-A and both Arabic
Presentation Forms blocks. Only codepoints whose NFKC form differs from
themselves are listed.
"""
import sys
import unicodedata

RANGES = [
    (0x0600, 0x06FF),
    (0x0750, 0x077F),
    (0x08A0, 0x08FF),
    (0xFB50, 0xFDFF),
    (0xFE70, 0xFEFF),
]


def c_escape(s: str) -> str:
    return "".join("\\x%02x" % b for b in s.encode("utf-8"))


def main() -> None:
    out = sys.stdout
    out.write("// Generated by tools/gen_arabic_compat_table.py (Unicode %s). Do not edit.\n"
              % unicodedata.unidata_version)
    count = 0
    for lo, hi in RANGES:
        for cp in range(lo, hi + 1):
            ch = chr(cp)
            norm = unicodedata.normalize("NFKC", ch)
            if norm != ch:
                out.write('{0x%04X, "%s"},\n' % (cp, c_escape(norm)))
                count += 1
    sys.stderr.write("%d entries\n" % count)


if __name__ == "__main__":
    main()
