"""``podkeeper`` command line.

Exit codes: 0 success, 1 request failed (not found, conflict, invalid input,
pod not ready), 2 authentication, 3 connectivity, 4 authorization,
5 usage.
"""

from __future__ import annotations

import argparse
import getpass
import json
import os
import sys
from datetime import datetime, timezone

from podkeeper import __version__
from podkeeper.client.api import ApiError, ConnectionFailed, GatewayClient
from podkeeper.client.console import Console
from podkeeper.client.demo import demo_arch
from podkeeper.client.output import table
from podkeeper.client.session import Session, default_session_path

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_AUTH = 2
EXIT_CONNECTION = 3
EXIT_FORBIDDEN = 4
EXIT_USAGE = 5

DEFAULT_HOST = "localhost"
DEFAULT_PORT = 8443

CREDENTIALS_BANNER = (
    "WARNING: these credentials give full query access to the pod.\n"
    "Do not print them in shared terminals, notebooks or logs."
)


class UsageFailure(Exception):
    pass


class NotLoggedIn(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(args, body: dict, text: str) -> None:
    print(json.dumps(body, indent=2, sort_keys=True) if args.json else text)


# session helpers


def _session_path(args):
    return args.session or default_session_path()


def _endpoint(args, session: Session | None) -> tuple[str, int]:
    host = args.host or os.environ.get("PODKEEPER_HOST") or (session.gateway_host if session else DEFAULT_HOST)
    port = args.port or os.environ.get("PODKEEPER_PORT") or (session.port if session else DEFAULT_PORT)
    return host, int(port)


def _client(args) -> tuple[GatewayClient, Session]:
    session = Session.load(_session_path(args))
    if session is None:
        raise NotLoggedIn("not logged in; run `podkeeper login <username>` first")
    expiry = datetime.strptime(session.token_expiry, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    if expiry <= datetime.now(timezone.utc):
        raise NotLoggedIn("session expired; run `podkeeper login` again")
    host, port = _endpoint(args, session)
    return GatewayClient(host, port, token=session.token), session


# commands


def cmd_login(args) -> int:
    if args.password_stdin:
        password = sys.stdin.readline().rstrip("\n")
    else:
        password = getpass.getpass(f"password for {args.username}: ")
    host, port = _endpoint(args, None)
    with GatewayClient(host, port) as client:
        try:
            body = client.login(args.username, password)
        except ApiError as exc:
            if exc.status == 401:
                print("authentication failed", file=sys.stderr)
                return EXIT_AUTH
            raise
    result = body["result"]
    Session(host, port, args.username, result["access_token"], result["expires_at"]).save(_session_path(args))
    shown = {"result": {"username": args.username, "expires_at": result["expires_at"]}}
    _emit(args, shown, f"logged in as {args.username}; token expires {result['expires_at']}")
    return EXIT_OK


def cmd_logout(args) -> int:
    path = _session_path(args)
    if os.path.exists(path):
        os.remove(path)
    print("logged out")
    return EXIT_OK


def cmd_whoami(args) -> int:
    client, _ = _client(args)
    with client:
        body = client.userinfo()
    info = body["result"]
    _emit(args, body, f"{info['username']} (account created {info['created_at']})")
    return EXIT_OK


def cmd_pods(args) -> int:
    client, session = _client(args)
    with client:
        return POD_ACTIONS[args.action](args, client, session)


def _pods_create(args, client, session) -> int:
    body = client.create_pod(args.pod_id, args.template, args.description)
    pod = body["result"]
    _emit(args, body, f"{pod['pod_id']} {pod['state']}\n{pod['url']}")
    return EXIT_OK


def _pods_list(args, client, session) -> int:
    body = client.list_pods()
    rows = [
        [p["pod_id"], p["pod_template"], p["state"], p["permissions"].get(session.username, "")]
        for p in body["result"]
    ]
    _emit(args, body, table(["pod_id", "template", "state", "permission"], rows) if rows else "no pods")
    return EXIT_OK


def _pods_info(args, client, session) -> int:
    body = client.get_pod(args.pod_id)
    pod = body["result"]
    lines = [f"{k}: {pod[k]}" for k in ("pod_id", "pod_template", "description", "owner", "state", "created_at", "url")]
    lines.append("permissions: " + ", ".join(f"{u}={lvl}" for u, lvl in pod["permissions"].items()))
    _emit(args, body, "\n".join(lines))
    return EXIT_OK


def _pods_delete(args, client, session) -> int:
    if not args.yes:
        if not sys.stdin.isatty():
            raise UsageFailure("refusing to delete without --yes")
        answer = input(f"type {args.pod_id!r} to delete it permanently: ")
        if answer.strip() != args.pod_id:
            print("aborted")
            return EXIT_FAILED
    body = client.delete_pod(args.pod_id)
    _emit(args, body, f"{args.pod_id} DELETED")
    return EXIT_OK


def _pods_perms(args, client, session) -> int:
    body = client.set_permission(args.pod_id, args.username, args.level.upper())
    perms = body["result"]["permissions"]
    _emit(args, body, table(["user", "level"], sorted(perms.items())))
    return EXIT_OK


def _pods_credentials(args, client, session) -> int:
    body = client.credentials(args.pod_id)
    creds = body["result"]
    print(CREDENTIALS_BANNER, file=sys.stderr)
    _emit(args, body, f"user_username: {creds['user_username']}\nuser_password: {creds['user_password']}")
    return EXIT_OK


POD_ACTIONS = {
    "create": _pods_create,
    "list": _pods_list,
    "info": _pods_info,
    "delete": _pods_delete,
    "perms": _pods_perms,
    "credentials": _pods_credentials,
}


def cmd_console(args) -> int:
    client, session = _client(args)
    pod_id = args.pod_id or session.current_pod
    if not pod_id:
        raise UsageFailure("no pod given and no current pod in the session")
    with client:
        stdin = None
        if args.execute:
            stdin = [s if s.lstrip().startswith(":") or s.rstrip().endswith(";") else s + ";" for s in args.execute]
        elif not sys.stdin.isatty():
            stdin = sys.stdin
        console = Console(client, pod_id, stdin=stdin)
        code = console.loop()
    if console.pod_id != session.current_pod:
        session.current_pod = console.pod_id
        session.save(_session_path(args))
    return code


def cmd_demo_arch(args) -> int:
    client, _ = _client(args)
    with client:
        report = demo_arch(client, args.pod_id, args.dot)
    _emit(
        args,
        {"result": report},
        f"pod {report['pod_id']}: {report['nodes']} nodes, {report['relationships']} relationships\n"
        f"dot export written to {report['dot_path']}",
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    from podkeeper.gateway.config import load_config
    from podkeeper.gateway.server import run_forever

    overrides = {"base_host": args.base_host, "bind": args.bind, "data_dir": args.data_dir, "port": args.port}
    config = load_config(args.config, **overrides)
    print(f"podkeeper gateway on {config.bind}:{config.port} (base host {config.base_host}, data {config.data_dir})")
    run_forever(config)
    return EXIT_OK


def cmd_add_user(args) -> int:
    from podkeeper.authsvc import AccountStore
    from podkeeper.gateway.config import load_config

    config = load_config(args.config, data_dir=args.data_dir)
    if args.password_stdin:
        password = sys.stdin.readline().rstrip("\n")
    else:
        password = getpass.getpass(f"new password for {args.username}: ")
        if getpass.getpass("again: ") != password:
            raise UsageFailure("passwords do not match")
    if not password:
        raise UsageFailure("password must not be empty")
    store = AccountStore(config.data_dir / "accounts.json", scrypt_n=config.scrypt_n)
    store.create_user(args.username, password)
    print(f"created user {args.username}")
    return EXIT_OK


# argument parsing


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--host", default=default, help="gateway host (env PODKEEPER_HOST)")
    parser.add_argument("--port", type=int, default=default, help="gateway port (env PODKEEPER_PORT)")
    parser.add_argument("--session", default=default, help="session file path")
    parser.add_argument("--json", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="print raw wire JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="podkeeper", description="Manage knowledge-graph pods and query them.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        _common(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = command("login", cmd_login, "obtain an access token")
    p.add_argument("username")
    p.add_argument("--password-stdin", action="store_true", help="read the password from stdin")

    command("logout", cmd_logout, "forget the stored session")
    command("whoami", cmd_whoami, "show the logged-in account")

    p = command("pods", cmd_pods, "pod lifecycle and permissions")
    actions = p.add_subparsers(dest="action", required=True, parser_class=Parser)

    def action(name, help):
        a = actions.add_parser(name, help=help)
        _common(a, suppress=True)
        return a

    a = action("create", "create a pod")
    a.add_argument("pod_id")
    a.add_argument("--template", default="neo4j")
    a.add_argument("--description", default="")
    action("list", "list pods you can access")
    action("info", "show pod metadata").add_argument("pod_id")
    a = action("delete", "delete a pod")
    a.add_argument("pod_id")
    a.add_argument("--yes", action="store_true", help="do not ask for confirmation")
    a = action("perms", "grant a permission level")
    a.add_argument("pod_id")
    a.add_argument("username")
    a.add_argument("level", type=str.upper, choices=["READ", "USER", "ADMIN"])
    action("credentials", "print the pod's query credentials").add_argument("pod_id")

    p = command("console", cmd_console, "interactive Cypher console for a pod")
    p.add_argument("pod_id", nargs="?")
    p.add_argument("-e", "--execute", action="append", metavar="STATEMENT",
                   help="run STATEMENT (or :meta-command) and exit; repeatable")

    p = command("demo-arch", cmd_demo_arch, "load the architecture knowledge graph into a pod")
    p.add_argument("--pod", dest="pod_id", default="archkg")
    p.add_argument("--dot", default="architecture.dot", help="where to write the dot export")

    p = command("serve", cmd_serve, "run the gateway")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--base-host")
    p.add_argument("--bind")
    p.add_argument("--data-dir")

    p = command("admin", lambda a: EXIT_USAGE, "server-side administration")
    admin = p.add_subparsers(dest="admin_command", required=True, parser_class=Parser)
    a = admin.add_parser("add-user", help="create a user account in the data directory")
    a.add_argument("username")
    a.add_argument("--config")
    a.add_argument("--data-dir")
    a.add_argument("--password-stdin", action="store_true")
    a.set_defaults(func=cmd_add_user)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except NotLoggedIn as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_AUTH
    except UsageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConnectionFailed:
        print("connection failed", file=sys.stderr)
        return EXIT_CONNECTION
    except ApiError as exc:
        if exc.status == 401:
            print(f"authentication failed: {exc.message}", file=sys.stderr)
            return EXIT_AUTH
        if exc.status == 403:
            print(f"forbidden: {exc.message}", file=sys.stderr)
            return EXIT_FORBIDDEN
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return EXIT_FAILED
    except Exception as exc:
        from podkeeper.errors import PodkeeperError

        if isinstance(exc, PodkeeperError):
            print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
            return EXIT_FAILED
        raise


if __name__ == "__main__":
    sys.exit(main())
