"""Black-box L0 attacks by pixel rearrangement."""

from ._pixle import (
    AttackConfig,
    AttackOutcome,
    CallableOracle,
    ConfigError,
    Dataset,
    ImageTensor,
    LinearModel,
    LinearOracle,
    MappingKind,
    Oracle,
    PixelProbeOracle,
    PixleError,
    ProtocolError,
    SearchAlgorithm,
    TransferMode,
    TransportError,
    aggregate_metrics,
    apply_mapping,
    build_patch_indices,
    l0_pixel_distance,
    load_manifest,
    load_png,
    make_oracle,
    map_pixel,
    run_attack,
    run_campaign,
    run_cli,
    run_targeted_matrix,
    save_png,
    select_correctly_classified,
)

__all__ = [name for name in dir() if not name.startswith("_")]
