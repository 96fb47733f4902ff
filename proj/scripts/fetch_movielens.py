#!/usr/bin/env python3
"""Fetch MovieLens100K into data/ml-100k/u.data.

Downloads from grouplens.org when reachable. Otherwise extracts the copy
bundled in the recbole wheel (pulled through pip) and rewrites it in the
original tab-separated u.data layout.
"""

import argparse
import hashlib
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
MD5 = "6e47046882bad158b0efbb84cd5cb987"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS, timeout=30) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data")


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "recbole==1.2.1", "--no-deps", "-d", tmp],
            check=True,
            stdout=subprocess.DEVNULL,
        )
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        text = zipfile.ZipFile(wheel).read("recbole/dataset_example/ml-100k/ml-100k.inter").decode()
    rows = text.splitlines()[1:]  # header: user_id:token item_id:token rating:float timestamp:float
    return "".join("\t".join(r.split("\t")) + "\n" for r in rows if r).encode()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/ml-100k/u.data")
    args = parser.parse_args()

    out = pathlib.Path(args.out)
    try:
        data = from_grouplens()
    except OSError as err:
        print(f"grouplens unreachable ({err}); using the recbole copy", file=sys.stderr)
        data = from_recbole()

    digest = hashlib.md5(data).hexdigest()
    if digest != MD5:
        sys.exit(f"checksum mismatch: {digest} != {MD5}")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    print(f"wrote {out} ({len(data.splitlines())} ratings)")


if __name__ == "__main__":
    main()
