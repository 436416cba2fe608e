import numpy as np

from qsdsim.streams import RandomStream, map_replicas


def test_same_stream_reproduces():
    a = RandomStream(42).generator().random(8)
    b = RandomStream(42).generator().random(8)
    assert np.array_equal(a, b)


def test_substreams_differ_from_parent_and_each_other():
    root = RandomStream(42)
    seqs = [root.generator().random(4)]
    seqs.append(root.substream(0).generator().random(4))
    seqs.append(root.substream(1).generator().random(4))
    seqs.append(root.substream(0, 1).generator().random(4))
    for i in range(len(seqs)):
        for j in range(i + 1, len(seqs)):
            assert not np.array_equal(seqs[i], seqs[j])


def test_substream_keys_compose():
    assert RandomStream(7).substream(1).substream(2) == RandomStream(7).substream(1, 2)


def _third_uniform(rng):
    rng.random(2)
    return float(rng.random())


def test_map_replicas_sequential_matches_parallel():
    stream = RandomStream(9)
    seq = map_replicas(_third_uniform, 300, stream, workers=1)
    par = map_replicas(_third_uniform, 300, stream, workers=3, chunk_size=32)
    assert seq == par
    assert len(seq) == 300
    # replica i depends only on (seed, i)
    assert seq[17] == _third_uniform(stream.substream(17).generator())


def test_map_replicas_chunk_edges():
    stream = RandomStream(10)
    for n in (1, 2, 31, 32, 33):
        out = map_replicas(_third_uniform, n, stream, workers=2, chunk_size=16)
        assert len(out) == n
