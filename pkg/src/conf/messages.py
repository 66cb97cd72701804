SINGULAR_FRAME = "Coframe is not invertible at this point"
OUT_OF_CHART = "Point lies outside the chart domain"
DERIVATIVE_UNAVAILABLE = "Derivatives cannot be formed at this point"
ORACLE_UNAVAILABLE = "Scenario has no closed-form geodesic"
UNKNOWN_SCENARIO = "Unknown scenario"
EMPTY_BODY = "Body needs at least one mass point"
CENTER_OFFSET = "Center of mass does not coincide with the body origin"
ANISOTROPIC_BODY = "Dynamics requires an isotropic body (inertia proportional to the identity)"
SHAPE_MISMATCH = "Array shapes do not match"
DIMENSION_MISMATCH = "Operation is only defined for a different manifold dimension"
NON_CONVERGENCE = "Implicit midpoint iteration did not converge"
CHART_EXIT = "Trajectory left the chart domain"
TOO_FEW_SAMPLES = "Trajectory has too few samples"
VALIDATION_FAILED = "Validation threshold exceeded"
EMPTY_GRID = "Sweep grid is empty"
