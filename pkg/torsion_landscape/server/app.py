import asyncio
import logging
from argparse import ArgumentParser
from typing import Any, Dict, Optional
from uuid import uuid4

import dask.distributed
import uvicorn
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from nest_asyncio import apply
from uvicorn import Config, Server

from torsion_landscape.analytic.field import DEFAULT_ALPHA, DEFAULT_H, RootConfig
from torsion_landscape.cmd import parse_floats
from torsion_landscape.context import Context
from torsion_landscape.report import error_body, report_document
from torsion_landscape.server.responses import ErrorResults, JobResults, VerifyRequest
from torsion_landscape.utils import InvalidConfigError, TorsionLandscapeError

app = FastAPI()
logger = logging.getLogger(__name__)


def verify_job(config: RootConfig, options: Dict[str, Any], auto: bool) -> Dict[str, Any]:
    """
    Run the certificates on a worker.
    Errors of the construction are returned as error body instead of raised.
    """
    context = Context(options)
    try:
        if auto:
            config, report = context.auto_epsilon(config)
        else:
            report = context.verify(config)
    except TorsionLandscapeError as err:
        return report_document(error_body(err), "error")
    return report_document(report.to_dict(), "certificates")


@app.post("/v1/verify")
async def verify(body: VerifyRequest, request: Request):
    """
    Submit the certificates of one configuration,
    the result is available under ``nextUri`` when done.
    """
    try:
        config = body.to_config()
    except InvalidConfigError as err:
        return JSONResponse(
            status_code=422, content=ErrorResults.from_exception(err).model_dump()
        )

    uuid = str(uuid4())
    request.app.future_list[uuid] = request.app.client.submit(
        verify_job,
        config,
        request.app.c.config.as_dict(),
        body.epsilon is None,
        pure=False,
    )
    logger.debug(f"Registering verification of {config} with uuid {uuid}.")

    status_url = str(request.url.replace(path=request.app.url_path_for("status", uuid=uuid)))
    cancel_url = str(request.url.replace(path=request.app.url_path_for("cancel", uuid=uuid)))
    return JobResults(id=uuid, nextUri=status_url, cancelUri=cancel_url)


@app.delete("/v1/cancel/{uuid}")
async def cancel(uuid: str, request: Request):
    """
    Cancel an already running verification
    """
    logger.debug(f"Canceling the request with uuid {uuid}")
    try:
        future = request.app.future_list[uuid]
    except KeyError:
        raise HTTPException(status_code=404, detail="uuid not found")
    future.cancel()
    del request.app.future_list[uuid]

    return {"status": "ok"}


@app.get("/v1/status/{uuid}")
async def status(uuid: str, request: Request):
    """
    Return the status (or the certificates) of a submitted verification
    """
    logger.debug(f"Accessing the request with uuid {uuid}")
    try:
        future = request.app.future_list[uuid]
    except KeyError:
        raise HTTPException(status_code=404, detail="uuid not found")

    if future.done():
        logger.debug(f"{uuid} is already finished, returning the certificates")
        del request.app.future_list[uuid]
        try:
            return future.result()
        except Exception as err:
            return JSONResponse(
                status_code=500, content=ErrorResults.from_exception(err).model_dump()
            )

    logger.debug(f"{uuid} is not finished yet")
    return JobResults(id=uuid, nextUri=str(request.url))


@app.get("/v1/predictions")
async def prediction(
    request: Request,
    k: int = 2,
    roots: Optional[str] = None,
    epsilon: float = 1e-3,
    alpha: float = DEFAULT_ALPHA,
    h: float = DEFAULT_H,
):
    """
    The closed-form predictions of one configuration,
    ``roots`` given as comma separated list.
    """
    try:
        config = RootConfig(
            k=k,
            roots=parse_floats(roots) if roots else RootConfig.canonical_roots(k),
            epsilon=epsilon,
            alpha=alpha,
            h=h,
        )
    except (InvalidConfigError, ValueError) as err:
        return JSONResponse(
            status_code=422, content=ErrorResults.from_exception(err).model_dump()
        )
    return report_document(request.app.c.predict(config).to_dict(), "prediction")


def run_server(
    context: Context = None,
    client: dask.distributed.Client = None,
    host: str = "0.0.0.0",
    port: int = 8080,
    log_level=None,
    blocking: bool = True,
):  # pragma: no cover
    """
    Run a HTTP server answering verification requests.
    A request ``POST /v1/verify`` with a JSON body like

    .. code-block:: json

        {"k": 2, "roots": [-2, -1, 1, 2], "epsilon": 0.001}

    submits the certificates to the dask cluster and answers with the
    ``nextUri`` under which the report can be fetched once it is done.

    Args:
        context (:obj:`torsion_landscape.Context`): If set, use this context (and its settings) instead of a new one.
        client (:obj:`dask.distributed.Client`): If set, use this dask client instead of a new one.
        host (:obj:`str`): The host interface to listen on (defaults to all interfaces)
        port (:obj:`int`): The port to listen on (defaults to 8080)
        log_level: (:obj:`str`): The log level of the server
        blocking: (:obj:`bool`): If running in an environment with an event loop (e.g. a jupyter notebook),
                do not block. The server can be stopped with `context.stop_server()` afterwards.

    Example:
        .. code-block:: python

            from torsion_landscape import Context

            c = Context()
            c.set_config({"geometry.extract.nx": 4096})
            c.run_server(port=8080)
    """
    _init_app(app, context=context, client=client)

    config = Config(app, host=host, port=port, log_level=log_level)
    server = Server(config=config)

    loop = asyncio.get_event_loop()
    if blocking:
        if loop and loop.is_running():
            apply(loop=loop)

        server.run()
    else:
        if not loop or not loop.is_running():
            raise AttributeError(
                "blocking=False needs a running event loop (e.g. in a jupyter notebook)"
            )
        loop.create_task(server.serve())
        return server


def main():  # pragma: no cover
    """
    CLI version of the :func:`run_server` function.
    """
    parser = ArgumentParser()
    parser.add_argument(
        "--host",
        default="0.0.0.0",
        help="The host interface to listen on (defaults to all interfaces)",
    )
    parser.add_argument(
        "--port", default=8080, type=int, help="The port to listen on (defaults to 8080)"
    )
    parser.add_argument(
        "--scheduler-address",
        default=None,
        help="Connect to this dask scheduler if given",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        help="Set the log level of the server. Defaults to info.",
        choices=uvicorn.config.LOG_LEVELS,
    )

    args = parser.parse_args()

    client = None
    if args.scheduler_address:
        client = dask.distributed.Client(args.scheduler_address)

    run_server(
        context=Context(),
        client=client,
        host=args.host,
        port=args.port,
        log_level=args.log_level,
    )


def _init_app(
    app: FastAPI, context: Context = None, client: dask.distributed.Client = None,
):
    app.c = context or Context()
    app.future_list = {}

    try:
        client = client or dask.distributed.Client.current()
    except ValueError:
        client = dask.distributed.Client()
    app.client = client
