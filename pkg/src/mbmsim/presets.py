"""Canned experiment setups.

Each preset bundles one system, an SNR grid, and a detector set into a
ready-to-run :class:`~mbmsim.simulate.SweepConfig`.  Names and parameters
follow the reference simulation table this package reproduces (BS with 128
antennas, 16 or 20 users, 3..6 mirrors, 4/16-QAM, L up to 8, K in
{1, M/4, M/2}); SNR grids are chosen so the interesting BER range is
covered under this package's per-antenna SNR normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import MbmConfig, square_qam
from .simulate import DetectorSpec, SweepConfig

__all__ = ["ExperimentPreset", "PRESETS", "get_preset"]


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    sweep: SweepConfig
    description: str


def _system(users: int, n_rf: int, qam: int = 4, n_r: int = 128) -> MbmConfig:
    return MbmConfig(n_r=n_r, users=users, n_rf=n_rf, constellation=square_qam(qam))


def _l_sweep(kind: str, ls=(1, 2, 4, 6, 8), k=None):
    return tuple(
        DetectorSpec(kind, iterations=l, list_size=k) for l in ls
    )


def _comparison(maps: int):
    ks = sorted({1, maps // 4, maps // 2} - {0})
    return (
        DetectorSpec("mmse"),
        DetectorSpec("map-isd", iterations=6),
        *(DetectorSpec("kmap-iic", iterations=6, list_size=k) for k in ks),
        DetectorSpec("iic", iterations=6),
    )


def _flop_comparison(maps: int):
    ks = sorted({1, maps // 4, maps // 2} - {0})
    return (
        DetectorSpec("map-isd", iterations=6),
        *(DetectorSpec("kmap-iic", iterations=6, list_size=k) for k in ks),
        DetectorSpec("iic", iterations=6),
    )


_GRID_4QAM = tuple(float(s) for s in range(0, 9))
_GRID_16QAM = tuple(float(s) for s in range(0, 15, 2))


def _build() -> dict[str, ExperimentPreset]:
    presets = [
        ExperimentPreset(
            "fig2",
            SweepConfig(_system(20, 3), _GRID_4QAM, _l_sweep("map-isd"), max_frames=50_000, seed=2),
            "map-isd convergence in L (1,2,4,6,8); 128x20, n_rf=3, 4-QAM",
        ),
        ExperimentPreset(
            "fig3",
            SweepConfig(_system(16, 4), _GRID_4QAM, _l_sweep("map-isd"), max_frames=50_000, seed=3),
            "map-isd convergence in L (1,2,4,6,8); 128x16, n_rf=4, 4-QAM",
        ),
        ExperimentPreset(
            "fig4",
            SweepConfig(
                _system(20, 3), _GRID_4QAM, _l_sweep("kmap-iic", ls=(1, 2, 4, 6), k=4),
                max_frames=50_000, seed=4,
            ),
            "kmap-iic (K=M/2) convergence in L (1,2,4,6); 128x20, n_rf=3, 4-QAM",
        ),
        ExperimentPreset(
            "fig5",
            SweepConfig(_system(20, 3), _GRID_4QAM, _comparison(8), max_frames=200_000, seed=5),
            "detector comparison (mmse, map-isd, kmap-iic K=1,M/4,M/2, iic); 128x20, n_rf=3, 4-QAM",
        ),
        ExperimentPreset(
            "fig6",
            SweepConfig(_system(20, 4), _GRID_4QAM, _comparison(16), max_frames=200_000, seed=6),
            "detector comparison; 128x20, n_rf=4, 4-QAM",
        ),
        ExperimentPreset(
            "fig7",
            SweepConfig(
                _system(16, 6), tuple(float(s) for s in range(0, 11)), _comparison(64),
                max_frames=200_000, seed=7,
            ),
            "detector comparison; 128x16, n_rf=6, 4-QAM",
        ),
        ExperimentPreset(
            "fig8",
            SweepConfig(_system(20, 3, qam=16), _GRID_16QAM, _comparison(8), max_frames=200_000, seed=8),
            "detector comparison; 128x20, n_rf=3, 16-QAM",
        ),
        ExperimentPreset(
            "fig9",
            SweepConfig(_system(20, 5, qam=16), _GRID_16QAM, _comparison(32), max_frames=200_000, seed=9),
            "detector comparison; 128x20, n_rf=5, 16-QAM",
        ),
        ExperimentPreset(
            "fig10",
            SweepConfig(
                _system(20, 4), (5.0,), _flop_comparison(16),
                min_bit_errors=1, max_frames=1_000, seed=10,
            ),
            "FLOP comparison at 5 dB (frame-capped); 128x20, n_rf=4, 4-QAM",
        ),
        ExperimentPreset(
            "fig11",
            SweepConfig(
                _system(16, 4), (5.0,), _flop_comparison(16),
                min_bit_errors=1, max_frames=1_000, seed=11,
            ),
            "FLOP comparison at 5 dB (frame-capped); 128x16, n_rf=4, 4-QAM",
        ),
    ]
    return {p.name: p for p in presets}


PRESETS: dict[str, ExperimentPreset] = _build()


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name.strip().lower()]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
