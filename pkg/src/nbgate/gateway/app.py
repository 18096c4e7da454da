"""FastAPI adapter over the gateway service.

Every route except POST /auth/login requires a bearer JWT; role checks
and all decisions live in the service layer, so this module is pure
plumbing: header extraction, status mapping, JSON in and out.
"""

from __future__ import annotations

from fastapi import Body, Depends, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import __version__
from ..aaa import Verdict
from .service import GatewayError, GatewayService, Session


def _bearer_of(request: Request) -> str | None:
    header = request.headers.get("authorization", "")
    if header.lower().startswith("bearer "):
        return header[7:].strip()
    return None


def _verdict_body(verdict: Verdict) -> dict:
    return {
        "action": verdict.action.value,
        "message": verdict.message,
        "trust-index": verdict.trust_after,
        "application-id": verdict.application_id,
    }


def create_app(service: GatewayService) -> FastAPI:
    app = FastAPI(title="nbgate", version=__version__)
    # The admin console is served from its own origin. Auth is bearer-only
    # (no cookies), so reflecting any origin does not widen access.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_session(request: Request) -> Session:
        return service.session(_bearer_of(request))

    @app.exception_handler(GatewayError)
    async def _gateway_error(_request: Request, exc: GatewayError) -> JSONResponse:
        return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})

    # -- sessions -------------------------------------------------------------

    @app.post("/auth/login")
    def login(body: dict = Body(...)) -> dict:
        return service.login(str(body.get("participant-id", "")), str(body.get("password", "")))

    @app.post("/auth/wallet")
    def upload_wallet(body: dict = Body(...), session: Session = Depends(require_session)) -> dict:
        return service.upload_wallet(session, body)

    @app.get("/ping")
    def ping(request: Request, session: Session = Depends(require_session)) -> dict:
        return service.ping(session, _bearer_of(request) or "")

    # -- application operations -------------------------------------------------

    @app.post("/tokens", status_code=201)
    def request_token(body: dict = Body(...), session: Session = Depends(require_session)) -> dict:
        return service.request_token(session, str(body.get("controller-id", "")))

    # -- controller operations ----------------------------------------------------

    @app.post("/verify")
    def verify(body: dict = Body(...), session: Session = Depends(require_session)) -> dict:
        return _verdict_body(service.verify_for_controller(session, body))

    # -- admin: applications -----------------------------------------------------

    @app.post("/admin/applications", status_code=201)
    def create_application(
        body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        return service.create_application(session, body)

    @app.get("/admin/applications")
    def list_applications(session: Session = Depends(require_session)) -> list:
        return service.list_applications(session)

    @app.get("/admin/applications/{app_id}")
    def application_detail(app_id: str, session: Session = Depends(require_session)) -> dict:
        return service.application_detail(session, app_id)

    @app.put("/admin/applications/{app_id}")
    def update_application(
        app_id: str, body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        payload = {"id": app_id, "name": str(body.get("name", ""))}
        return service.admin_commit(session, "updateApplication", payload) or {}

    @app.delete("/admin/applications/{app_id}")
    def remove_application(app_id: str, session: Session = Depends(require_session)) -> dict:
        service.admin_commit(session, "removeApplication", {"app-id": app_id})
        return {"removed": app_id}

    @app.post("/admin/applications/{app_id}/trust")
    def set_trust(
        app_id: str, body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        return service.set_trust(session, app_id, body.get("trust-index"))

    @app.post("/admin/applications/{app_id}/role")
    def set_role(
        app_id: str, body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        payload = {"app-id": app_id, "role-id": str(body.get("role-id", ""))}
        return service.admin_commit(session, "updateAppRole", payload) or {}

    # -- admin: controllers ------------------------------------------------------

    @app.post("/admin/controllers", status_code=201)
    def create_controller(
        body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        return service.create_controller(session, body)

    @app.get("/admin/controllers")
    def list_controllers(session: Session = Depends(require_session)) -> list:
        return service.list_controllers(session)

    @app.put("/admin/controllers/{controller_id}")
    def update_controller(
        controller_id: str, body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        payload = {
            "id": controller_id,
            "name": str(body.get("name", "")),
            "permissions": body.get("permissions", []),
        }
        return service.admin_commit(session, "updateController", payload) or {}

    @app.delete("/admin/controllers/{controller_id}")
    def remove_controller(
        controller_id: str, session: Session = Depends(require_session)
    ) -> dict:
        service.admin_commit(session, "removeController", {"controller-id": controller_id})
        return {"removed": controller_id}

    # -- admin: permissions and roles ----------------------------------------------

    @app.post("/admin/permissions", status_code=201)
    def create_permission(
        body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        return service.admin_commit(session, "createPermission", body) or {}

    @app.get("/admin/permissions")
    def list_permissions(session: Session = Depends(require_session)) -> list:
        return service.list_permissions(session)

    @app.delete("/admin/permissions/{permission_id}")
    def remove_permission(
        permission_id: str, session: Session = Depends(require_session)
    ) -> dict:
        service.admin_commit(session, "removePermission", {"permission-id": permission_id})
        return {"removed": permission_id}

    @app.post("/admin/roles", status_code=201)
    def create_role(body: dict = Body(...), session: Session = Depends(require_session)) -> dict:
        return service.admin_commit(session, "createRole", body) or {}

    @app.get("/admin/roles")
    def list_roles(session: Session = Depends(require_session)) -> list:
        return service.list_roles(session)

    @app.put("/admin/roles/{role_id}")
    def update_role(
        role_id: str, body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        payload = dict(body)
        payload["id"] = role_id
        return service.admin_commit(session, "updateRole", payload) or {}

    # -- admin: tokens ---------------------------------------------------------------

    @app.get("/admin/tokens")
    def list_tokens(
        status: str | None = None, session: Session = Depends(require_session)
    ) -> list:
        return service.list_tokens(session, status)

    @app.post("/admin/tokens/{token_id}/issue")
    def issue_token(token_id: str, session: Session = Depends(require_session)) -> dict:
        return service.issue_token(session, token_id)

    @app.post("/admin/tokens/{token_id}/expire")
    def expire_token(token_id: str, session: Session = Depends(require_session)) -> dict:
        return service.expire_token(session, token_id)

    # -- admin: routes and thresholds ---------------------------------------------------

    @app.get("/admin/routes")
    def list_routes(session: Session = Depends(require_session)) -> list:
        return service.list_routes(session)

    @app.post("/admin/routes", status_code=201)
    def register_route(body: dict = Body(...), session: Session = Depends(require_session)) -> dict:
        return service.register_route(session, body)

    @app.get("/admin/thresholds")
    def thresholds(session: Session = Depends(require_session)) -> dict:
        return service.thresholds(session)

    @app.put("/admin/thresholds/{resource_object}")
    def set_threshold(
        resource_object: str, body: dict = Body(...), session: Session = Depends(require_session)
    ) -> dict:
        return service.set_threshold(session, resource_object, body.get("threshold"))

    # -- shared read-only views -----------------------------------------------------------

    @app.get("/logs")
    def list_logs(
        offset: int = 0,
        limit: int | None = None,
        session: Session = Depends(require_session),
    ) -> dict:
        return service.list_logs(session, offset=offset, limit=limit)

    @app.get("/blocks")
    def list_blocks(
        start: int = 0,
        limit: int | None = None,
        session: Session = Depends(require_session),
    ) -> dict:
        return service.list_blocks(session, start=start, limit=limit)

    return app
