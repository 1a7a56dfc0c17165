"""Viewership data model, file formats and a synthetic panel generator."""

from .io import (
    load_catalog,
    load_orders,
    load_panel,
    load_viewership,
    load_viewership_channels,
    order_records,
    write_catalog,
    write_orders,
    write_panel,
    write_viewership,
)
from .model import (
    AGE_BANDS,
    ALL_CELLS,
    CELL_CODES,
    N_CELLS,
    DataError,
    DemographicCell,
    Order,
    Panel,
    Slot,
    SlotCatalog,
    ViewershipRecord,
    ViewershipSeries,
    cell_mask,
    make_panel,
)
from .ops import aggregate_impressions, interpolate_missing, observed_records
from .synthetic import (
    GeneratorConfig,
    GeneratorError,
    Harmonic,
    SyntheticData,
    generate_synthetic,
    independent_panel,
    simulate,
)

__all__ = [
    "AGE_BANDS", "ALL_CELLS", "CELL_CODES", "N_CELLS", "DataError", "DemographicCell", "Order",
    "Panel", "Slot", "SlotCatalog", "ViewershipRecord", "ViewershipSeries", "cell_mask",
    "make_panel", "aggregate_impressions", "interpolate_missing", "observed_records",
    "GeneratorConfig", "GeneratorError", "Harmonic", "SyntheticData", "generate_synthetic",
    "independent_panel", "simulate", "load_catalog", "load_orders", "load_panel", "load_viewership",
    "load_viewership_channels", "order_records", "write_catalog", "write_orders", "write_panel", "write_viewership",
]
