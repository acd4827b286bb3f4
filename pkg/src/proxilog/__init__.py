"""proxilog: telemetry capture and proxemic analysis for 3D virtual spaces.

Pipeline: clients (or the built-in simulator) emit position/orientation
ticks in batches to the ingest server, which appends them to a JSONL log.
The resampler decimates each user's stream to fixed-rate frames, and the
engine computes proxemic metrics (interpersonal distances and zones,
occupancy and view-direction grids, attention containment, group detection)
that export to CSV and render to SVG/PGM.
"""

from ._kernels import backend_name
from .engine import (
    ExtentBox,
    FrameClusters,
    HeightHistogram,
    NNSample,
    OccupancyGrid,
    PairwiseMatrices,
    ProxemicZone,
    QuiverField,
    ZoneHistogram,
    classify_zone,
    detect_groups,
    fov_containment,
    group_timeline,
    height_histogram,
    intimate_collision_rate,
    modal_cluster_count,
    nearest_neighbour_series,
    occupancy,
    occupied_extent,
    pairwise,
    pairwise_frames,
    quiver,
    zone_histogram,
)
from .ingest import IngestServer, read_log
from .model import (
    RoomGeometry,
    SessionLog,
    TickEvent,
    ValidationError,
    sort_and_segment,
    validate_tick,
)
from .render import RenderSpec, render_heatmap, render_histogram, render_quiver
from .resample import FrameStore, Pose, dataset_summary, resample, resample_by_room
from .simulate import (
    DeliveryReport,
    EmitError,
    Scenario,
    emit,
    run_scenario,
    scenario_from_json,
    scenario_to_json,
)

__version__ = "0.1.0"
