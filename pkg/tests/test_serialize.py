import pytest

from helpers import callsite_instance, small_instance
from ifds.query import pair_query, preprocess, source_query
from ifds.serialize import IndexFormatError, load_index, read_index, save_index, write_index


def _same_answers(a, b):
    inst, m = a.inst, a.m
    for p in inst.sg.procedures:
        for u in p.vertices:
            for d1 in range(m):
                assert source_query(a, u, d1).bits == source_query(b, u, d1).bits
                for v in p.vertices:
                    for d2 in range(m):
                        assert pair_query(a, u, d1, v, d2) == pair_query(b, u, d1, v, d2)


def test_roundtrip_callsite(tmp_path):
    ix = preprocess(callsite_instance())
    path = tmp_path / "cs.idx"
    write_index(ix, path)
    back = read_index(path)
    _same_answers(ix, back)
    assert back.anc_F == ix.anc_F and back.anc_Fp == ix.anc_Fp and back.desc_F == ix.desc_F
    assert save_index(back) == save_index(ix)


@pytest.mark.parametrize("seed", range(10))
def test_roundtrip_random(seed):
    ix = preprocess(small_instance(7000 + seed, nmax=80))
    _same_answers(ix, load_index(save_index(ix)))


def test_rejects_garbage():
    with pytest.raises(IndexFormatError):
        load_index(b"not an index at all")
    data = bytearray(save_index(preprocess(callsite_instance())))
    data[8] = 99  # version
    with pytest.raises(IndexFormatError):
        load_index(bytes(data))
    good = save_index(preprocess(callsite_instance()))
    with pytest.raises(IndexFormatError):
        load_index(good[:-40])
