def get_design_summary() -> str:
    """
    Console summary of one design.
    ActionType: DESIGN

    Use .format(x_f=..., robust=..., N=..., t_f=..., switches=..., residuals=..., pmp=..., seed=...).
    """
    return (
        "Displacement      : {x_f:.6g} mm\n"
        "Robust            : {robust}\n"
        "Switches (N)      : {N}\n"
        "Maneuver time t_f : {t_f:.9f} s\n"
        "Switch times      : {switches}\n"
        "Constraint resid. : {residuals}\n"
        "PMP certificate   : {pmp}\n"
        "Seed family       : {seed}\n"
    )


def get_zone_summary() -> str:
    """
    Console summary of a closed-form (undamped) solution.
    ActionType: DESIGN

    Use .format(x_f=..., n=..., T1=..., T2=..., t_f=..., degenerate=...).
    """
    return (
        "Displacement      : {x_f:.6g} mm\n"
        "Zone n            : {n}{degenerate}\n"
        "T1                : {T1:.9f} s\n"
        "T2                : {T2:.9f} s\n"
        "Maneuver time t_f : {t_f:.9f} s\n"
    )
