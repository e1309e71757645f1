"""
Compatibility layer: re-exports the functions the CLI and scripts use, so
callers import from one place while the modules stay split by concern.
"""

# Config helpers
from config_helpers import (
    get_default_out_dir,
    get_default_jobs,
    get_max_cond_size,
    get_latents_max,
    get_select_max,
    get_coef_range,
    get_record_wall_time,
    save_config_updates,
)

# Graph files and datasets
from graph_io import (
    read_graph_file,
    write_graph_file,
    read_dataset,
    format_mixed_graph,
    format_directed_system,
)

# Export functions
from export import (
    export_dataset_to_csv,
    export_report_to_csv,
    export_report_to_excel,
    write_manifest,
    read_manifest,
    write_trace,
)

# Discovery
from cci import (
    cci_run,
    format_human_trace,
    read_trace_lines,
    replay_trace,
)

# Evaluation
from baselines_eval import (
    ALGORITHMS,
    ReportRow,
    audit_soundness,
    evaluate_against_truth,
    reference_graph,
    report_header,
    run_algorithm,
)

# Sweeps
from sweeps import (
    SweepConfig,
    run_sweep,
    simulate,
    summarize,
)
