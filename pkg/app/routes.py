from __future__ import annotations

import logging
from typing import Any, Optional

from flask import Blueprint, jsonify, request

from config.settings import get_settings
from app.services.errors import NumericalConvergenceError
from app.services.evaluations import evaluate_kernel, evaluate_zeta
from app.services.fields import BUILTIN_FIELDS, builtin_field
from app.services.identities import run_identity
from app.services.reports import evaluation_to_dict, report_to_dict
from models import IdentityId, PrecisionContext

logger = logging.getLogger(__name__)

bp = Blueprint("core", __name__)

MIN_DIGITS = 15
MAX_DIGITS = 200


class RequestValidationError(ValueError):
    """Raised when request parameters are missing or out of range."""


def _digits(raw: Optional[Any]) -> int:
    if raw is None or raw == "":
        return get_settings().DEFAULT_DIGITS
    try:
        digits = int(raw)
    except (TypeError, ValueError) as exc:
        raise RequestValidationError("digits must be an integer") from exc
    if not MIN_DIGITS <= digits <= MAX_DIGITS:
        raise RequestValidationError(f"digits must be between {MIN_DIGITS} and {MAX_DIGITS}")
    return digits


def _required(source: dict[str, Any], name: str) -> str:
    value = source.get(name)
    if value is None or str(value).strip() == "":
        raise RequestValidationError(f"{name} is required")
    return str(value)


def _error_response(exc: Exception):
    if isinstance(exc, NumericalConvergenceError):
        logger.warning("Numerical failure: %s", exc)
        return jsonify({"error": str(exc), "kind": "non_convergence"}), 422
    return jsonify({"error": str(exc)}), 400


@bp.get("/health")
def health():
    return jsonify({"status": "ok", "service": get_settings().SERVICE_NAME}), 200


@bp.get("/api/fields")
def list_fields():
    return jsonify({"fields": [field.describe() for field in BUILTIN_FIELDS.values()]})


@bp.get("/api/zeta")
def zeta_value():
    try:
        field = builtin_field(request.args.get("field", "Q"))
        ctx = PrecisionContext.from_digits(_digits(request.args.get("digits")))
        record = evaluate_zeta(field, _required(request.args, "at"), ctx)
    except (ValueError, NumericalConvergenceError) as exc:
        return _error_response(exc)
    return jsonify(evaluation_to_dict(record))


@bp.get("/api/kernel")
def kernel_value():
    try:
        field = builtin_field(request.args.get("field", "Q"))
        ctx = PrecisionContext.from_digits(_digits(request.args.get("digits")))
        method = request.args.get("method", "auto")
        record = evaluate_kernel(field, _required(request.args, "x"), ctx, method=method)
    except (ValueError, NumericalConvergenceError) as exc:
        return _error_response(exc)
    return jsonify(evaluation_to_dict(record))


@bp.post("/api/verify")
def verify():
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict):
        return jsonify({"error": "Expected a JSON object body."}), 400
    try:
        identity = IdentityId.parse(_required(payload, "identity"))
        field = builtin_field(str(payload.get("field", "Q")))
        ctx = PrecisionContext.from_digits(_digits(payload.get("digits")))
        params = {name: str(payload[name]) for name in ("m", "k", "alpha", "z") if payload.get(name) is not None}
        report = run_identity(identity, field, params, ctx)
    except (ValueError, NumericalConvergenceError) as exc:
        return _error_response(exc)
    return jsonify(report_to_dict(report))
