"""Command-line client for the experiment runners.

Runs in-process by default; with --server URL it becomes a thin HTTP client
of the levylab service (the URL scheme asgi:// mounts the app in-process,
which is what the tests use).  Exit codes: 0 all assertions pass, 1 an
assertion failed, 2 hypothesis/contract violation, 3 config error.
"""

import json
import os
import sys

import click

from .config import ConfigError, config_dict, load_config
from .ito import ContractViolation
from .runner import (dumps_report, run_convergence, run_localtime_check,
                     run_simulate, run_verify)

EXIT_FAIL = 1
EXIT_CONTRACT = 2
EXIT_CONFIG = 3


def _client(server):
    import httpx

    if server.startswith("asgi://"):
        # in-process mount of the service app (sync shim over ASGI)
        from fastapi.testclient import TestClient

        from .service import app
        return TestClient(app)
    return httpx.Client(base_url=server, timeout=600.0)


def _remote(server, endpoint, payload):
    with _client(server) as client:
        resp = client.post(endpoint, json=payload)
    if resp.status_code == 409:
        raise ContractViolation(resp.json().get("detail", "contract violation"))
    if resp.status_code in (400, 422):
        raise ConfigError(json.dumps(resp.json().get("detail", "config error")))
    resp.raise_for_status()
    return resp.json()


def _load(config_path, seed):
    cfg = load_config(config_path)
    if seed is not None:
        cfg.run.seed = seed
    return cfg


def _write_out(out, name, text):
    os.makedirs(out, exist_ok=True)
    target = os.path.join(out, name)
    with open(target, "w") as fh:
        fh.write(text)
    return target


def _summary_table(report):
    lines = [f"formula={report['formula']}  K={report['n_steps']}  "
             f"M={report['n_paths']}  seed={report['seed']}  t={report['t_eval']}"]
    lines.append(f"{'term':<28}{'mean':>15}{'se':>13}")
    for name, stat in report["terms"].items():
        lines.append(f"{name:<28}{stat['mean']:>+15.6e}{stat['se']:>13.3e}")
    lines.append(f"{'lhs':<28}{report['lhs']['mean']:>+15.6e}{report['lhs']['se']:>13.3e}")
    res = report["residual"]
    verdict = "PASS" if report["verdict"]["residual_zero"] else "FAIL"
    lines.append(f"{'residual':<28}{res['mean']:>+15.6e}{res['se']:>13.3e}"
                 f"   rms={res['rms']:.3e}  verdict: {verdict}")
    return "\n".join(lines)


common_options = [
    click.option("--config", "config_path", required=True,
                 type=click.Path(exists=True, dir_okay=False),
                 help="experiment config JSON"),
    click.option("--seed", type=int, default=None, help="override the config seed"),
    click.option("--workers", type=int, default=os.cpu_count() or 1,
                 show_default="cpu count", help="worker threads"),
    click.option("--out", type=click.Path(file_okay=False), default=None,
                 help="directory for report artifacts"),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                 default="json", show_default=True),
    click.option("--server", default=None,
                 help="base URL of a running levylab service (asgi:// for in-process)"),
]


def _with_common(fn):
    for opt in reversed(common_options):
        fn = opt(fn)
    return fn


def _run_guarded(fn):
    try:
        return fn()
    except ContractViolation as exc:
        click.echo(f"contract violation: {exc}", err=True)
        sys.exit(EXIT_CONTRACT)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """Numerical experiments on Ito-type formulas for Levy processes."""


@main.command()
@click.option("--traces", is_flag=True,
              help="also emit per-path term traces (needs --out)")
@_with_common
def verify(config_path, seed, workers, out, fmt, server, traces):
    """Run the config's verifier and report every term with its error."""

    def work():
        cfg = _load(config_path, seed)
        if server:
            body = _remote(server, "/verify",
                           {"config": config_dict(cfg), "workers": workers})
            return body["report"]
        return run_verify(cfg, workers=workers, traces=traces)

    report = _run_guarded(work)
    trace_csv = report.pop("traces_csv", None)
    click.echo(_summary_table(report))
    if fmt == "json":
        click.echo(dumps_report(report))
    else:
        click.echo("term,mean,se")
        for name, stat in report["terms"].items():
            click.echo(f"{name},{stat['mean']!r},{stat['se']!r}")
    if out:
        _write_out(out, "report.json", dumps_report(report))
        if trace_csv is not None:
            _write_out(out, "traces.csv", trace_csv)
    sys.exit(0 if report["passed"] else EXIT_FAIL)


@main.command()
@_with_common
def simulate(config_path, seed, workers, out, fmt, server):
    """Write an ensemble of simulated paths plus a manifest."""

    def work():
        cfg = _load(config_path, seed)
        if server:
            body = _remote(server, "/simulate",
                           {"config": config_dict(cfg), "workers": workers})
            return body["manifest"]
        return run_simulate(cfg, out_dir=out, workers=workers)

    manifest = _run_guarded(work)
    if out and "inline_files" in manifest:
        # remote run: materialize the returned CSVs locally
        inline = manifest.pop("inline_files")
        for name, text in inline.items():
            _write_out(out, name, text)
        _write_out(out, "manifest.json", json.dumps(manifest, sort_keys=True, indent=2))
    click.echo(json.dumps({k: v for k, v in manifest.items() if k != "inline_files"},
                          sort_keys=True, indent=2))
    sys.exit(0)


@main.command()
@click.option("--k-values", "k_values", required=True,
              help="comma-separated K list, e.g. 256,1024,4096")
@_with_common
def convergence(config_path, seed, workers, out, fmt, server, k_values):
    """Sweep K and fit the log-log slope of the residual RMS."""

    def work():
        ks = [int(v) for v in k_values.split(",") if v.strip()]
        cfg = _load(config_path, seed)
        if server:
            body = _remote(server, "/convergence",
                           {"config": config_dict(cfg), "k_values": ks,
                            "workers": workers})
            return body["report"]
        return run_convergence(cfg, ks, workers=workers)

    report = _run_guarded(work)
    csv_lines = ["K,residual_rms,residual_se"]
    csv_lines += [f"{r['K']},{r['residual_rms']!r},{r['residual_se']!r}"
                  for r in report["rows"]]
    csv_text = "\n".join(csv_lines) + "\n"
    if fmt == "csv":
        click.echo(csv_text, nl=False)
    else:
        click.echo(dumps_report(report))
    if report["degenerate"]:
        click.echo("slope: degenerate (residuals at rounding level)")
    else:
        click.echo(f"slope: {report['slope']:.4f} +- {report['slope_se']:.4f}")
    if out:
        _write_out(out, "convergence.csv", csv_text)
        _write_out(out, "convergence.json", dumps_report(report))
    sys.exit(0)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


@main.command("localtime-check")
@_with_common
def localtime_check(config_path, seed, workers, out, fmt, server):
    """Cross-check the local-time integral against its oracles."""

    def work():
        cfg = _load(config_path, seed)
        if server:
            body = _remote(server, "/localtime-check",
                           {"config": config_dict(cfg), "workers": workers})
            return body["report"]
        return run_localtime_check(cfg, workers=workers)

    report = _run_guarded(work)
    for pair, chk in report["pairs"].items():
        status = "PASS" if chk["passed"] else "FAIL"
        click.echo(f"{pair}: |diff|={chk['difference']:.3e} "
                   f"tol={chk['tolerance']:.3e} {status}")
    if fmt == "json":
        click.echo(dumps_report(report))
    if out:
        _write_out(out, "localtime_check.json", dumps_report(report))
    sys.exit(0 if report["passed"] else EXIT_FAIL)


if __name__ == "__main__":
    main()
