#!/usr/bin/env python3
"""Independent SHA3-256 oracle for type identifiers.

A type-id is the first 8 bytes, big-endian, of SHA3-256 over the canonical
type encoding. This script computes the ids for the fixture type corpus with
Python's hashlib so the C++ implementation can be checked byte-for-byte.
Emits JSON suitable for committing under fixtures/.
"""

import hashlib
import json


def type_id(encoding: str) -> int:
    digest = hashlib.sha3_256(encoding.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


CORPUS = [
    "i8",
    "i16",
    "i32",
    "i64",
    "f32",
    "f64",
    "p(i64)",
    "fn(void|i32)",
    "fn(i64|i64)",
    "rec(i64,p(i64))",
    "arr(i64,4)",
    "rec(i64,p(^0))",
]


def main() -> None:
    entries = [{"encoding": e, "type_id": f"{type_id(e):016x}"} for e in CORPUS]
    print(json.dumps({"entries": entries}, indent=2))


if __name__ == "__main__":
    main()
