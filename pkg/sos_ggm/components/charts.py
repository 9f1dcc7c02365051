import logging

import plotly.express as px
import plotly.graph_objects as go

logger = logging.getLogger(__name__)


def create_count_chart(scan_frame, transitions=()):
    """
    Create a step chart of solution counts against tau

    Args:
        scan_frame (pd.DataFrame): Scan points with tau, n_total and n_ggm_upper
        transitions (iterable): Refined transitions, drawn as vertical lines

    Returns:
        dict: Plotly figure as a dictionary
    """
    if scan_frame.empty:
        logger.debug("count chart requested for an empty scan")
        return {}

    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=scan_frame["tau"],
        y=scan_frame["n_total"],
        mode="lines",
        line=dict(shape="hv", color="blue", width=2),
        name="Solutions",
    ))
    fig.add_trace(go.Scatter(
        x=scan_frame["tau"],
        y=scan_frame["n_ggm_upper"],
        mode="lines",
        line=dict(shape="hv", color="red", width=2, dash="dash"),
        name="GGM upper bound",
    ))
    for transition in transitions:
        fig.add_vline(x=transition.tau, line_width=1, line_dash="dot", line_color="gray")

    k = int(scan_frame["k"].iloc[0])
    fig.update_layout(
        title=f"Periodic boundary laws, k={k}",
        xaxis_title="tau",
        yaxis_title="count",
        height=400,
    )
    return fig.to_dict()


def create_region_heatmap(scan_frame, curves=None):
    """
    Create a heatmap of candidate counts over the (tau, h) grid

    Args:
        scan_frame (pd.DataFrame): Field scan points with tau, h and n_candidates
        curves (dict): Region boundary curves to overlay

    Returns:
        dict: Plotly figure as a dictionary
    """
    if scan_frame.empty:
        return {}

    pivot_data = scan_frame.pivot(index="h", columns="tau", values="n_candidates")
    fig = go.Figure(data=go.Heatmap(
        z=pivot_data.values,
        x=pivot_data.columns,
        y=pivot_data.index,
        colorscale="Viridis",
        colorbar=dict(title="Candidates"),
    ))
    if curves:
        fig.add_trace(go.Scatter(x=curves["tau"], y=curves["h_lower"], mode="lines", name="h = 4/tau"))
        fig.add_trace(go.Scatter(
            x=curves["tau"],
            y=curves["h_upper"],
            mode="lines",
            name="h = tau^3/(8(tau^2-8))",
        ))
    fig.update_layout(
        title="Field phase diagram, k=2",
        xaxis_title="tau",
        yaxis_title="h",
        yaxis_range=[float(scan_frame["h"].min()), float(scan_frame["h"].max())],
        height=500,
    )
    return fig.to_dict()


def create_solution_chart(solution_frame):
    """Scatter of solutions in the (a, b) plane coloured by branch"""
    if solution_frame.empty:
        return {}
    fig = px.scatter(solution_frame, x="a", y="b", color="branch", title="Positive solutions")
    fig.update_layout(height=400)
    return fig.to_dict()


def create_kernel_heatmap(kernel_frame):
    """Heatmap of transition probabilities P(i -> j)"""
    if kernel_frame.empty:
        return {}
    fig = go.Figure(data=go.Heatmap(
        z=kernel_frame.values,
        x=kernel_frame.columns,
        y=kernel_frame.index,
        colorscale="Viridis",
        colorbar=dict(title="P(i -> j)"),
    ))
    fig.update_layout(title="Transition kernel", xaxis_title="j", yaxis_title="i", height=500)
    return fig.to_dict()
