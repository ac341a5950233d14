"""Web resource synchronization toolkit: model, documents, sync engines,
deterministic simulator, and metrics."""

from .core import (ChangeEvent, ChangeType, Representation, ResourceState,
                   ResourceStore, StoreRole, apply_change, in_sync,
                   states_equal)
from .engine import (SyncOutcome, SyncSession, baseline_sync,
                     baseline_sync_from_dump, incremental_sync)
from .metrics import (SimReport, average_consistency, consistency_at,
                      data_transfer_efficiency, record_latencies)
from .simnet import NetworkModel, SimClock, transfer_time
from .simulator import SimConfig, bootstrap_source, generate_change, run_simulation
from .syncdocs import (CapabilityDocument, ChangeList, ResourceDump,
                       ResourceList, build_change_list, build_resource_list,
                       document_byte_size, parse_change_list,
                       parse_resource_list, serialize_change_list,
                       serialize_resource_list)

__version__ = "0.1.0"
