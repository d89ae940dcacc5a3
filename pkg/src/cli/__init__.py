import click

from src import LOGGER
from src.errors import ToolkitError

OS_ERROR_EXIT = 4


class ToolkitGroup(click.Group):
    """
    Map toolkit errors to exit codes: config 2, data 3, other toolkit errors 1, file system 4
    """

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ToolkitError as error:
            LOGGER.error(f"{type(error).__name__}: {error}")
            click.echo(f"Error: {error}", err=True)
            ctx.exit(error.exit_code)
        except OSError as error:
            LOGGER.error(f"OSError: {error}")
            click.echo(f"Error: {error}", err=True)
            ctx.exit(OS_ERROR_EXIT)


@click.group(cls=ToolkitGroup)
@click.option("--verbose", is_flag=True, help="Log at DEBUG level")
@click.pass_context
def cli(ctx, verbose):
    """
    Robust classification benchmarks for high dimension, low sample size data
    """

    ctx.ensure_object(dict)
    settings = ctx.obj.setdefault("settings", {})
    if verbose:
        settings["LOG_LEVEL"] = "DEBUG"


from src.cli.commands import bench, eval_real, simulate  # noqa: E402

cli.add_command(simulate)
cli.add_command(bench)
cli.add_command(eval_real)
