"""
VALFRAM Validation Dashboard - Streamlit UI
Browse validation reports and heat maps, or run a validation on uploaded diaries
"""

import streamlit as st
import json
import tempfile
from pathlib import Path
import sys

import numpy as np
import pandas as pd

# Add project root to path
sys.path.append(str(Path(__file__).parent))

from config import OUTPUT_DIR, STEP_ORDER, configure_logging, get_step_info, validate_config
from valfram.errors import ValframError
from valfram.ingest import load_step_config, parse_diary
from valfram.orchestrator import ValidationOrchestrator
from valfram.report import read_grid_csv, read_report, report_text, write_grids, write_report
from valfram.steps import StepConfig

configure_logging()
validate_config()

# Page configuration
st.set_page_config(
    page_title="VALFRAM Validation",
    page_icon="🧭",
    layout="wide",
    initial_sidebar_state="expanded"
)

# Custom CSS
st.markdown("""
<style>
    .main-header {
        font-size: 2.6rem;
        font-weight: bold;
        text-align: center;
        color: #1f77b4;
        margin-bottom: 2rem;
    }
    .stat-card {
        background-color: #f0f2f6;
        padding: 1.5rem;
        border-radius: 10px;
        text-align: center;
        margin: 0.5rem 0;
    }
    .stat-number {
        font-size: 2.2rem;
        font-weight: bold;
        color: #1f77b4;
    }
    .stat-label {
        font-size: 0.9rem;
        color: #666;
        margin-top: 0.5rem;
    }
</style>
""", unsafe_allow_html=True)

PAGES = ["📊 Report", "🗺️ Heat Maps", "🚀 Run Validation"]

# Initialize session state
if 'current_page' not in st.session_state:
    st.session_state.current_page = PAGES[0]
if 'last_report' not in st.session_state:
    st.session_state.last_report = None


def stat_card(column, number, label):
    with column:
        st.markdown(f"""
        <div class="stat-card">
            <div class="stat-number">{number}</div>
            <div class="stat-label">{label}</div>
        </div>
        """, unsafe_allow_html=True)


def records_frame(records):
    """Flat table of records for display"""
    rows = []
    for record in records:
        rows.append({
            "statistic": record.statistic,
            "activity_type": record.activity_type or "",
            "mode": record.mode or "",
            "hour_bin": f"{record.hour_bin[0] // 3600:02d}h-{record.hour_bin[1] // 3600:02d}h" if record.hour_bin else "",
            "status": record.status,
            "value": record.value,
            "n_model": record.n_model,
            "n_validation": record.n_validation,
            "reason": record.reason or "",
        })
    return pd.DataFrame(rows)


def show_report(report):
    """Config echo, dataset summaries and one tab per step"""
    col1, col2, col3, col4 = st.columns(4)
    ok = sum(1 for r in report.records if r.status == "ok")
    stat_card(col1, len(report.records), "📋 Records")
    stat_card(col2, ok, "✅ Computed")
    stat_card(col3, sum(1 for r in report.records if r.status == "skipped"), "⏭️ Skipped")
    stat_card(col4, len(report.failed()), "❌ Failed")

    st.markdown("---")
    col1, col2 = st.columns(2)
    with col1:
        st.subheader("⚙️ Configuration")
        st.json(report.config.to_dict(), expanded=False)
        st.caption(f"Tool version {report.tool_version}")
    with col2:
        st.subheader("📦 Datasets")
        st.dataframe(pd.DataFrame(report.dataset_summaries).T, use_container_width=True)

    st.markdown("---")
    tabs = st.tabs(STEP_ORDER)
    for tab, step in zip(tabs, STEP_ORDER):
        with tab:
            info = get_step_info(step)
            st.markdown(f"**{step}: {info['name']}**. {info['task']}")
            records = report.for_step(step)
            if records:
                st.dataframe(records_frame(records), use_container_width=True, hide_index=True)
                for record in records:
                    if record.diagnostics and record.diagnostics.get("top_discrepancies"):
                        with st.expander("🔎 Largest n-gram discrepancies"):
                            st.dataframe(pd.DataFrame(record.diagnostics["top_discrepancies"]), hide_index=True)
            else:
                st.info("No records for this step.")


def grid_image(path):
    """Grayscale image of a grid CSV, north up"""
    values = read_grid_csv(path)
    low, high = values.min(), values.max()
    scaled = (values - low) / (high - low) if high > low else np.zeros_like(values)
    # Row 0 of a grid is the minimal y
    return np.flipud(scaled)


# Main title
st.markdown('<h1 class="main-header">VALFRAM Model Validation</h1>', unsafe_allow_html=True)

# Sidebar
with st.sidebar:
    st.title("Navigation")

    page = st.radio(
        "Choose a section:",
        PAGES,
        key='page_navigation',
        index=PAGES.index(st.session_state.current_page)
    )
    st.session_state.current_page = page

    st.markdown("---")
    st.caption(f"📁 Output directory: `{OUTPUT_DIR}`")

current_page = st.session_state.current_page

# Report Page
if current_page == "📊 Report":
    st.header("📊 Validation Report")

    reports = sorted(OUTPUT_DIR.glob("*.json")) if OUTPUT_DIR.exists() else []
    uploaded = st.file_uploader("Open a report JSON", type=["json"])

    report = None
    try:
        if uploaded is not None:
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "report.json"
                path.write_bytes(uploaded.getvalue())
                report = read_report(path)
        elif reports:
            choice = st.selectbox("Reports in the output directory", reports, format_func=lambda p: p.name)
            report = read_report(choice)
        elif st.session_state.last_report is not None:
            report = st.session_state.last_report
    except (ValframError, KeyError, json.JSONDecodeError) as e:
        st.error(f"Cannot read report: {e}")

    if report is not None:
        show_report(report)
    else:
        st.info("🎯 No report yet. Run `python -m valfram validate ... --out output/report.json` or use the Run Validation page.")

# Heat Map Page
elif current_page == "🗺️ Heat Maps":
    st.header("🗺️ Activity Heat Maps (step A2)")

    grid_dirs = [OUTPUT_DIR] + sorted(p for p in OUTPUT_DIR.iterdir() if p.is_dir()) if OUTPUT_DIR.exists() else []
    grid_files = sorted(f for d in grid_dirs for f in d.glob("A2_*.csv"))
    if not grid_files:
        st.info("💡 Emit grids with `--emit-grids` into the output directory to see them here.")
    else:
        activity_types = sorted({f.stem[len("A2_"):].rsplit("_", 2)[0] for f in grid_files})
        activity_type = st.selectbox("Activity type", activity_types)
        kind = st.radio("Grid", ["kde", "ecdf"], horizontal=True)

        col1, col2 = st.columns(2)
        for column, side in ((col1, "model"), (col2, "validation")):
            with column:
                st.subheader(side.title())
                matches = [f for f in grid_files if f.name == f"A2_{activity_type}_{side}_{kind}.csv"]
                if matches:
                    st.image(grid_image(matches[0]), clamp=True, use_container_width=True)
                    st.caption(str(matches[0]))
                else:
                    st.info("No grid for this side.")

# Run Page
elif current_page == "🚀 Run Validation":
    st.header("🚀 Run a Validation")

    col1, col2 = st.columns(2)
    with col1:
        model_file = st.file_uploader("Model diary CSV", type=["csv"], key="model_upload")
    with col2:
        validation_file = st.file_uploader("Validation diary CSV", type=["csv"], key="validation_upload")
    config_file = st.file_uploader("Step configuration JSON (optional)", type=["json"])
    save_outputs = st.checkbox("Save report and grids to the output directory", value=True)

    if st.button("▶️ Validate", use_container_width=True, disabled=not (model_file and validation_file)):
        try:
            with tempfile.TemporaryDirectory() as tmp:
                paths = {}
                for name, upload in (("model", model_file), ("validation", validation_file), ("config", config_file)):
                    if upload is not None:
                        paths[name] = Path(tmp) / upload.name
                        paths[name].write_bytes(upload.getvalue())

                cfg = load_step_config(paths["config"]) if "config" in paths else StepConfig()
                with st.spinner("🔄 Running steps A1-B3..."):
                    outcome = ValidationOrchestrator(cfg).run(
                        parse_diary(paths["model"]), parse_diary(paths["validation"])
                    )

            st.session_state.last_report = outcome.report
            if save_outputs:
                OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
                write_report(outcome.report, OUTPUT_DIR / "report.json")
                write_grids(outcome, OUTPUT_DIR / "grids")
                st.success(f"💾 Saved to {OUTPUT_DIR}")

            st.download_button(
                "⬇️ Download report JSON",
                report_text(outcome.report, "json"),
                file_name="report.json",
                mime="application/json",
            )
            show_report(outcome.report)
        except ValframError as e:
            st.error(f"Validation input rejected: {e}")

# Footer
st.markdown("---")
st.markdown(
    """
    <div style='text-align: center; color: #666;'>
        <p>VALFRAM Validation Toolkit | Orchestrated with LangGraph</p>
    </div>
    """,
    unsafe_allow_html=True
)
