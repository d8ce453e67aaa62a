import math

import numpy as np
import pytest

from maicas.circuit import LumpedCircuit
from maicas.errors import CalibrationFailed, DomainError
from maicas.readout import (ReaderCouple, S11Sweep, add_noise,
                            default_reader, dip_of, fit_reader,
                            input_impedance, s11_spectrum)


def mesh_impedance(circuit, reader, f):
    """Two-port oracle: solve the coupled mesh equations directly."""
    w = 2.0 * math.pi * f
    m = reader.coupling_coefficient * math.sqrt(
        reader.reader_inductance * circuit.inductance)
    z = np.array([
        [reader.reader_resistance + 1j * w * reader.reader_inductance,
         1j * w * m],
        [1j * w * m,
         circuit.resistance + 1j * w * circuit.inductance
         + 1.0 / (1j * w * circuit.capacitance)],
    ])
    currents = np.linalg.solve(z, np.array([1.0, 0.0]))
    return 1.0 / currents[0]


class TestInputImpedance:
    def test_matches_mesh_solution(self, rest_circuit, reader):
        for f in np.linspace(1.5e9, 2.0e9, 23):
            got = input_impedance(rest_circuit, reader, f)
            want = mesh_impedance(rest_circuit, reader, f)
            assert got == pytest.approx(want, rel=1e-10)

    def test_vectorized_agrees_with_scalar(self, rest_circuit, reader):
        freqs = np.linspace(1.6e9, 1.8e9, 11)
        vec = input_impedance(rest_circuit, reader, freqs)
        for f, z in zip(freqs, vec):
            assert z == pytest.approx(input_impedance(rest_circuit, reader, f))

    def test_zero_coupling_leaves_reader_alone(self, rest_circuit):
        bare = ReaderCouple(6e-9, 1.0, 0.0)
        f = 1.71e9
        w = 2.0 * math.pi * f
        got = input_impedance(rest_circuit, bare, f)
        assert got == pytest.approx(1.0 + 1j * w * 6e-9, rel=1e-12)


class TestS11Spectrum:
    def test_dip_depth_at_design_point(self, rest_circuit, reader):
        sweep = s11_spectrum(rest_circuit, reader, 1.5e9, 2.0e9, 2001)
        assert float(np.min(sweep.magnitude_db)) == pytest.approx(-14.0, abs=0.1)

    def test_passive(self, rest_circuit, reader):
        sweep = s11_spectrum(rest_circuit, reader, 1.0e9, 3.0e9, 501)
        assert np.all(sweep.magnitude_db <= 0.0)

    def test_quarter_capacitance_doubles_dip_frequency(self, rest_circuit, reader):
        quarter = LumpedCircuit(rest_circuit.inductance,
                                rest_circuit.capacitance / 4.0,
                                rest_circuit.resistance)
        f1, _ = dip_of(rest_circuit, reader)
        f2, _ = dip_of(quarter, reader)
        assert abs(f2 / f1 - 2.0) < 1e-3


class TestDipOf:
    def test_near_natural_resonance(self, rest_circuit, reader):
        f_dip, depth = dip_of(rest_circuit, reader)
        # loading shifts the dip off f0 by well under a percent
        assert abs(f_dip - rest_circuit.f0) / rest_circuit.f0 < 0.01
        assert depth == pytest.approx(-14.0, abs=0.1)

    def test_grid_refinement_converges(self, rest_circuit, reader):
        f_wide, _ = dip_of(rest_circuit, reader, rel_span=0.20)
        f_tight, _ = dip_of(rest_circuit, reader, rel_span=0.02)
        assert abs(f_wide - f_tight) < 50e3

    def test_returns_plain_floats(self, rest_circuit, reader):
        f_dip, depth = dip_of(rest_circuit, reader)
        assert type(f_dip) is float
        assert type(depth) is float


class TestS11SweepContainer:
    def test_frequencies_grid(self):
        sweep = S11Sweep(1.0e9, 2.0e9, 5, [-1.0, -2.0, -9.0, -2.0, -1.0])
        assert np.allclose(sweep.frequencies,
                           [1.0e9, 1.25e9, 1.5e9, 1.75e9, 2.0e9])

    def test_magnitudes_read_only_copy(self):
        src = np.array([-1.0, -2.0, -3.0])
        sweep = S11Sweep(1.0e9, 2.0e9, 3, src)
        src[0] = -99.0
        assert sweep.magnitude_db[0] == -1.0
        with pytest.raises(ValueError):
            sweep.magnitude_db[0] = 0.0

    @pytest.mark.parametrize("f_start,f_stop,n,mags", [
        (2.0e9, 1.0e9, 3, [-1.0, -1.0, -1.0]),   # inverted span
        (1.0e9, 2.0e9, 1, [-1.0]),               # single point
        (1.0e9, 2.0e9, 3, [-1.0, -1.0]),         # length mismatch
        (1.0e9, 2.0e9, 3, [-1.0, 0.5, -1.0]),    # active (gain) sample
        (-1.0, 2.0e9, 3, [-1.0, -1.0, -1.0]),    # negative frequency
    ])
    def test_rejects_malformed(self, f_start, f_stop, n, mags):
        with pytest.raises(DomainError):
            S11Sweep(f_start, f_stop, n, mags)


class TestAddNoise:
    def test_zero_sigma_is_identity(self, rest_circuit, reader):
        sweep = s11_spectrum(rest_circuit, reader, 1.5e9, 2.0e9, 101)
        assert add_noise(sweep, 0.0, 0) is sweep

    def test_seed_determinism(self, rest_circuit, reader):
        sweep = s11_spectrum(rest_circuit, reader, 1.5e9, 2.0e9, 101)
        a = add_noise(sweep, 0.1, 42)
        b = add_noise(sweep, 0.1, 42)
        c = add_noise(sweep, 0.1, 43)
        assert np.array_equal(a.magnitude_db, b.magnitude_db)
        assert not np.array_equal(a.magnitude_db, c.magnitude_db)

    def test_accepts_seed_sequence(self, rest_circuit, reader):
        sweep = s11_spectrum(rest_circuit, reader, 1.5e9, 2.0e9, 101)
        ss = np.random.SeedSequence((0, 1, 2))
        a = add_noise(sweep, 0.1, ss)
        b = add_noise(sweep, 0.1, np.random.SeedSequence((0, 1, 2)))
        assert np.array_equal(a.magnitude_db, b.magnitude_db)

    def test_noise_stays_passive(self, rest_circuit, reader):
        sweep = s11_spectrum(rest_circuit, reader, 1.5e9, 2.0e9, 2001)
        noisy = add_noise(sweep, 3.0, 1)
        assert np.all(noisy.magnitude_db <= 0.0)

    def test_negative_sigma_rejected(self, rest_circuit, reader):
        sweep = s11_spectrum(rest_circuit, reader, 1.5e9, 2.0e9, 11)
        with pytest.raises(DomainError):
            add_noise(sweep, -0.1, 0)


class TestFitReader:
    @pytest.mark.parametrize("target", [-20.0, -14.0, -6.0])
    def test_hits_target_depth(self, rest_circuit, target):
        fitted = fit_reader(rest_circuit, target_depth_db=target)
        _, depth = dip_of(rest_circuit, fitted)
        assert abs(depth - target) < 0.05

    def test_coupling_physical(self, rest_circuit, reader):
        assert 0.0 < reader.coupling_coefficient < 0.95
        assert reader.reader_resistance > 0.0
        assert reader.reader_inductance > 0.0

    def test_nonnegative_depth_rejected(self, rest_circuit):
        with pytest.raises(DomainError):
            fit_reader(rest_circuit, target_depth_db=0.5)

    def test_impossible_depth_fails(self, rest_circuit):
        with pytest.raises((CalibrationFailed, DomainError)):
            fit_reader(rest_circuit, target_depth_db=-200.0)


class TestDefaultReader:
    def test_single_turn_ring(self, device):
        rdr = default_reader(device)
        assert rdr.reader_resistance == 1.0
        assert rdr.coupling_coefficient == pytest.approx(0.05)
        assert 1e-9 < rdr.reader_inductance < 1e-7

    def test_validation(self):
        with pytest.raises(DomainError):
            ReaderCouple(6e-9, 1.0, 1.0)      # k must stay below unity
        with pytest.raises(DomainError):
            ReaderCouple(-6e-9, 1.0, 0.1)
