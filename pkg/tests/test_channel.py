import numpy as np
import pytest

from mbmsim.channel import (
    ChannelSet,
    DegenerateChannelError,
    NoiseModel,
    derived_rng,
    dump_channel_set,
    generate_channel,
    gram_diag_inverse,
    hardening_metric,
    load_channel_set,
    transmit,
)
from mbmsim.model import MbmConfig, MbmSymbol, encode, square_qam, to_dense


def cfg(n_r=16, users=2, n_rf=2, qam=4):
    return MbmConfig(n_r=n_r, users=users, n_rf=n_rf, constellation=square_qam(qam))


class TestGenerate:
    def test_moments_over_a_million_entries(self):
        # 1024 * 32 * 32 = 1,048,576 CN(0,1) draws
        c = MbmConfig(n_r=1024, users=32, n_rf=5, constellation=square_qam(4))
        cs = generate_channel(derived_rng(123), c)
        entries = np.concatenate([h.ravel() for h in cs.per_user])
        assert abs(entries.real.mean()) < 0.01
        assert abs(entries.imag.mean()) < 0.01
        assert abs(np.mean(np.abs(entries) ** 2) - 1.0) < 0.02

    def test_same_seed_bit_identical(self):
        c = cfg()
        a = generate_channel(derived_rng(7, 1, 2), c)
        b = generate_channel(derived_rng(7, 1, 2), c)
        for ha, hb in zip(a.per_user, b.per_user):
            assert np.array_equal(ha, hb)
        for wa, wb in zip(a.pseudo_inverses, b.pseudo_inverses):
            assert np.array_equal(wa, wb)

    def test_different_path_different_draw(self):
        c = cfg()
        a = generate_channel(derived_rng(7, 1, 2), c)
        b = generate_channel(derived_rng(7, 1, 3), c)
        assert not np.array_equal(a.per_user[0], b.per_user[0])

    def test_dimensions(self):
        c = cfg(n_r=12, users=3, n_rf=3)
        cs = generate_channel(derived_rng(0), c)
        assert cs.users == 3 and cs.n_r == 12 and cs.maps == 8
        assert cs.stacked().shape == (12, 24)


class TestDiagInverse:
    def test_scaled_orthonormal_columns(self):
        # unitary-up-to-scale H: the diagonal inverse is the exact inverse
        rng = np.random.default_rng(5)
        q, _ = np.linalg.qr(rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4)))
        h = 3.0 * q
        w = gram_diag_inverse(h)
        assert np.allclose(w @ h, np.eye(4), atol=1e-10)

    def test_unit_diagonal(self):
        cs = generate_channel(derived_rng(3), cfg(n_r=64, users=4, n_rf=3))
        for h, w in zip(cs.per_user, cs.pseudo_inverses):
            diag = np.diag(w @ h)
            # exact up to float64 rounding of the two summation orders
            assert np.allclose(diag, 1.0, rtol=1e-13, atol=0)

    def test_matches_generic_inverse_on_diagonal_terms(self):
        h = np.array(
            [
                [1.0 + 0.5j, -0.25 + 1.0j],
                [0.5 - 1.0j, 2.0 + 0.0j],
                [-1.5 + 0.1j, 0.3 - 0.7j],
                [0.2 + 0.2j, -1.0 - 1.0j],
            ]
        )
        w = gram_diag_inverse(h)
        gram = h.conj().T @ h
        expected = np.linalg.inv(np.diag(np.diag(gram))) @ h.conj().T
        assert np.allclose(w, expected, atol=1e-12)

    def test_zero_column_rejected(self):
        h = np.ones((4, 2), dtype=complex)
        h[:, 1] = 0
        with pytest.raises(DegenerateChannelError):
            gram_diag_inverse(h)

    def test_off_diagonal_shrinks_with_antennas(self):
        # median worst off-diagonal of W H over seeds: N_r=32 vs N_r=512
        def worst_offdiag(n_r, seed):
            c = MbmConfig(n_r=n_r, users=2, n_rf=1, constellation=square_qam(4))
            cs = generate_channel(derived_rng(seed), c)
            vals = []
            for h, w in zip(cs.per_user, cs.pseudo_inverses):
                prod = w @ h
                np.fill_diagonal(prod, 0)
                vals.append(np.abs(prod).max())
            return max(vals)

        small = np.median([worst_offdiag(32, s) for s in range(200)])
        large = np.median([worst_offdiag(512, s) for s in range(200)])
        assert large < small


class TestTransmit:
    def test_noiseless_single_user_column(self):
        c = cfg(users=1)
        cs = generate_channel(derived_rng(1), c)
        sym = MbmSymbol(2, 1)
        y = transmit(cs, [sym], NoiseModel(0.0), derived_rng(2), c.constellation)
        q = c.constellation.points[1]
        assert np.allclose(y, q * cs.per_user[0][:, 2])

    def test_zero_symbol_rejected(self):
        c = cfg(users=1)
        cs = generate_channel(derived_rng(1), c)
        from mbmsim.model import ZERO

        with pytest.raises(ValueError):
            transmit(cs, [ZERO], NoiseModel(0.0), derived_rng(2), c.constellation)

    def test_wrong_symbol_count(self):
        c = cfg(users=2)
        cs = generate_channel(derived_rng(1), c)
        with pytest.raises(ValueError):
            transmit(cs, [MbmSymbol(0, 0)], NoiseModel(0.0), derived_rng(2), c.constellation)

    def test_linearity_noiseless(self):
        c = cfg(users=2)
        cs = generate_channel(derived_rng(4), c)
        syms = [MbmSymbol(1, 2), MbmSymbol(3, 0)]
        y = transmit(cs, syms, NoiseModel(0.0), derived_rng(0), c.constellation)
        manual = sum(
            h @ to_dense(s, c.maps, c.constellation) for h, s in zip(cs.per_user, syms)
        )
        assert np.allclose(y, manual)
        # scaling the dense vectors scales the superposition
        scaled = sum(
            h @ (2.5 * to_dense(s, c.maps, c.constellation))
            for h, s in zip(cs.per_user, syms)
        )
        assert np.allclose(2.5 * y, scaled)

    def test_mean_received_energy(self):
        # each unit-energy user contributes ~N_r on average
        c = cfg(n_r=8, users=3, n_rf=2)
        rng = derived_rng(10)
        total = 0.0
        trials = 10_000
        for _ in range(trials):
            cs = generate_channel(rng, c)
            bits = rng.integers(0, 2, size=(3, c.bits_per_symbol), dtype=np.uint8)
            syms = [encode(bits[k], c) for k in range(3)]
            y = transmit(cs, syms, NoiseModel(0.0), rng, c.constellation)
            total += np.linalg.norm(y) ** 2
        assert total / trials == pytest.approx(c.users * c.n_r, rel=0.03)

    def test_noise_variance(self):
        c = cfg(n_r=2048, users=1)
        cs = generate_channel(derived_rng(11), c)
        y0 = transmit(cs, [MbmSymbol(0, 0)], NoiseModel(0.0), derived_rng(12), c.constellation)
        y1 = transmit(cs, [MbmSymbol(0, 0)], NoiseModel(4.0), derived_rng(12), c.constellation)
        noise = y1 - y0
        assert np.mean(np.abs(noise) ** 2) == pytest.approx(4.0, rel=0.1)


class TestHardening:
    def test_orthogonal_columns_give_zero(self):
        h = np.eye(8, dtype=complex)[:, :4]
        cs = ChannelSet((h,), (gram_diag_inverse(h),), (np.ones(4),))
        assert hardening_metric(cs) == pytest.approx(0.0, abs=1e-15)

    def test_large_array_is_hard(self):
        c = MbmConfig(n_r=1024, users=2, n_rf=2, constellation=square_qam(4))
        cs = generate_channel(derived_rng(42), c)
        assert hardening_metric(cs) < 0.2

    def test_invariant_to_user_reordering(self):
        c = cfg(n_r=32, users=3)
        cs = generate_channel(derived_rng(9), c)
        perm = ChannelSet(
            cs.per_user[::-1], cs.pseudo_inverses[::-1], cs.col_norms2[::-1]
        )
        assert hardening_metric(perm) == pytest.approx(hardening_metric(cs), rel=1e-12)


class TestDumpLoad:
    def test_round_trip(self, tmp_path):
        c = cfg(n_r=16, users=3, n_rf=3)
        cs = generate_channel(derived_rng(21), c)
        path = tmp_path / "channels.bin"
        dump_channel_set(cs, path)
        back = load_channel_set(path)
        assert back.users == cs.users and back.n_r == cs.n_r and back.maps == cs.maps
        for ha, hb in zip(cs.per_user, back.per_user):
            assert np.array_equal(ha.astype(np.complex64), hb.astype(np.complex64))

    def test_layout_is_little_endian_with_header(self, tmp_path):
        c = cfg(n_r=4, users=1, n_rf=1)
        cs = generate_channel(derived_rng(22), c)
        path = tmp_path / "channels.bin"
        dump_channel_set(cs, path)
        raw = path.read_bytes()
        assert raw[:8] == b"MBMCHAN1"
        assert int.from_bytes(raw[8:12], "little") == 1  # users
        assert int.from_bytes(raw[12:16], "little") == 4  # n_r
        assert int.from_bytes(raw[16:20], "little") == 2  # maps
        first = np.frombuffer(raw[20:28], dtype="<c8")[0]
        assert first == np.complex64(cs.per_user[0][0, 0])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTCHAN1" + b"\0" * 32)
        with pytest.raises(ValueError):
            load_channel_set(path)
