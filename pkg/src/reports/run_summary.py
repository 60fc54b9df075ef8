def get_run_summary() -> str:
    """
    Footer printed after every subcommand.

    Use .format(command=..., status=..., outputs=..., duration=...).
    """
    return (
        "Command  : {command}\n"
        "Status   : {status}\n"
        "Outputs  : {outputs}\n"
        "Duration : {duration:.2f}s\n"
    )
