"""Latest-value-per-class queries over absolute versus delta-summation storage."""

from .engine import (
    DeltaState,
    EngineConfig,
    InsertBatch,
    convert_absolute_to_delta,
    convert_delta_to_absolute,
    insert_absolute,
    insert_delta,
    select_latest_absolute,
    select_latest_delta,
)
from .model import CounterSet, LatestValue, Manifest, Mode, Predicate, Relation, RowTuple
from .workload import Order, WorkloadSpec, gen_dataset, load_relation, save_relation

__version__ = "0.1.0"

__all__ = [
    "CounterSet",
    "DeltaState",
    "EngineConfig",
    "InsertBatch",
    "LatestValue",
    "Manifest",
    "Mode",
    "Order",
    "Predicate",
    "Relation",
    "RowTuple",
    "WorkloadSpec",
    "convert_absolute_to_delta",
    "convert_delta_to_absolute",
    "gen_dataset",
    "insert_absolute",
    "insert_delta",
    "load_relation",
    "save_relation",
    "select_latest_absolute",
    "select_latest_delta",
]
