# Import the figure builders for easier access
from sos_ggm.components.charts import (
    create_count_chart,
    create_kernel_heatmap,
    create_region_heatmap,
    create_solution_chart,
)
