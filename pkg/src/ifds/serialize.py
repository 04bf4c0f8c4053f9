"""Binary index files.

All integers are little-endian unsigned 64-bit words unless noted.

    magic      8 bytes  b"IFDSIDX\\0"
    version    u64
    n          u64      supergraph vertices
    domain     u64      |D| (the zero fact is implicit)
    procs      u64
    json_len   u64      length of the embedded instance JSON
    offsets    u64[procs]   byte offset of each procedure section
    json       json_len bytes, zero padded to a multiple of 8

    procedure section:
      nbags, nlayout          u64, u64
      parent                  i64[nbags]       (-1 for the root)
      bag sizes               u64[nbags]
      bag vertices            u64[sum of sizes]
      layout order            u64[nlayout]     vertices in pre-order layout
      euler_len               u64
      euler                   u64[euler_len]
      first                   u64[nbags]
      levels                  u64
      sparse table            levels rows of u64[euler_len - 2^row + 1]
      per vertex of the layout order, per fact: three bit strings
      (ancestor forward, ancestor backward, descendant), each stored as
      u64 word count followed by that many u64 words, low word first.

Children of a bag are rebuilt in increasing bag id, which is how the
writer's trees are numbered, so left/right order survives the round trip.
"""

from __future__ import annotations

import struct
from array import array
from io import BytesIO

from .instance import InstanceError, dump_instance, parse_instance
from .query import ProcIndex, QueryIndex
from .reach import preorder_layout
from .treedec import LcaIndex, TreeDecomposition

MAGIC = b"IFDSIDX\0"
VERSION = 1


class IndexFormatError(ValueError):
    pass


def _words(values, signed=False) -> bytes:
    arr = array("q" if signed else "Q", values)
    if arr.itemsize != 8:
        raise RuntimeError("platform lacks 64-bit array items")
    if struct.pack("=H", 1) != struct.pack("<H", 1):
        arr.byteswap()
    return arr.tobytes()


def _bits(out: BytesIO, value: int) -> None:
    nwords = (value.bit_length() + 63) // 64
    out.write(struct.pack("<Q", nwords))
    out.write(value.to_bytes(nwords * 8, "little"))


def save_index(ix: QueryIndex) -> bytes:
    m = ix.m
    doc = dump_instance(ix.inst).encode()
    sections = []
    for P in ix.procs:
        td, lca, layout = P.td, P.lca, P.layout
        buf = BytesIO()
        buf.write(struct.pack("<QQ", len(td), len(layout.order)))
        buf.write(_words(td.parent, signed=True))
        buf.write(_words([len(b) for b in td.bags]))
        buf.write(_words([v for b in td.bags for v in b]))
        buf.write(_words(layout.order))
        buf.write(struct.pack("<Q", len(lca.euler)))
        buf.write(_words(lca.euler))
        buf.write(_words(lca.first))
        buf.write(struct.pack("<Q", len(lca.table)))
        for row in lca.table:
            buf.write(_words(row))
        for v in layout.order:
            for d in range(m):
                x = v * m + d
                _bits(buf, ix.anc_F[x])
                _bits(buf, ix.anc_Fp[x])
                _bits(buf, ix.desc_F[x])
        sections.append(buf.getvalue())
    pad = (-len(doc)) % 8
    header_len = 8 + 5 * 8 + 8 * len(sections)
    offsets = []
    pos = header_len + len(doc) + pad
    for s in sections:
        offsets.append(pos)
        pos += len(s)
    out = BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<5Q", VERSION, ix.inst.sg.n, ix.inst.domain.size, len(sections), len(doc)))
    out.write(_words(offsets))
    out.write(doc + b"\0" * pad)
    for s in sections:
        out.write(s)
    return out.getvalue()


class _Reader:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def u64(self) -> int:
        if self.pos + 8 > len(self.data):
            raise IndexFormatError("truncated index file")
        (v,) = struct.unpack_from("<Q", self.data, self.pos)
        self.pos += 8
        return v

    def words(self, count: int, signed=False) -> list[int]:
        end = self.pos + 8 * count
        if end > len(self.data):
            raise IndexFormatError("truncated index file")
        arr = array("q" if signed else "Q")
        arr.frombytes(self.data[self.pos:end])
        if struct.pack("=H", 1) != struct.pack("<H", 1):
            arr.byteswap()
        self.pos = end
        return arr.tolist()

    def bits(self) -> int:
        nwords = self.u64()
        end = self.pos + 8 * nwords
        if end > len(self.data):
            raise IndexFormatError("truncated index file")
        v = int.from_bytes(self.data[self.pos:end], "little")
        self.pos = end
        return v


def load_index(data: bytes) -> QueryIndex:
    if data[:8] != MAGIC:
        raise IndexFormatError("not an index file")
    r = _Reader(data, 8)
    version, n, dsize, nprocs, json_len = (r.u64() for _ in range(5))
    if version != VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    offsets = r.words(nprocs)
    try:
        inst = parse_instance(data[r.pos:r.pos + json_len])
    except InstanceError as exc:
        raise IndexFormatError(f"embedded instance: {exc}") from None
    if inst.sg.n != n or inst.domain.size != dsize or len(inst.sg.procedures) != nprocs:
        raise IndexFormatError("header does not match the embedded instance")
    m = inst.m
    root_bag = [0] * n
    anc_F = [0] * (n * m)
    anc_Fp = [0] * (n * m)
    desc_F = [0] * (n * m)
    procs = []
    for off in offsets:
        r.pos = off
        nbags, nlayout = r.u64(), r.u64()
        parent = r.words(nbags, signed=True)
        sizes = r.words(nbags)
        flat = r.words(sum(sizes))
        bags, i = [], 0
        for s in sizes:
            bags.append(tuple(flat[i:i + s]))
            i += s
        order = r.words(nlayout)
        td = TreeDecomposition(bags, parent)
        layout = preorder_layout(td, m)
        if layout.order != order:
            raise IndexFormatError("stored layout disagrees with the stored tree")
        lca = LcaIndex.__new__(LcaIndex)
        elen = r.u64()
        lca.euler = r.words(elen)
        lca.first = r.words(nbags)
        levels = r.u64()
        lca.table = [r.words(elen - (1 << k) + 1) for k in range(levels)]
        lca.depth = td.depth
        for v in order:
            root_bag[v] = td.root_bag[v]
            for d in range(m):
                x = v * m + d
                anc_F[x] = r.bits()
                anc_Fp[x] = r.bits()
                desc_F[x] = r.bits()
        procs.append(ProcIndex(td, lca, layout))
    return QueryIndex(inst, procs, root_bag, anc_F, anc_Fp, desc_F, {})


def write_index(ix: QueryIndex, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_index(ix))


def read_index(path) -> QueryIndex:
    with open(path, "rb") as fh:
        return load_index(fh.read())
