"""SSL certificate trace: decode a captured chain into certificate facts.

Trust decisions never fail this trace; expired or weakly signed chains are
reported as-is because the capture handshake already runs with validation
disabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import ClassVar

from cryptography import x509

from .clock import Clock, SystemClock
from .errors import ProtocolViolationError
from .model import Target, TraceKind, TraceResult, execute_trace
from .transport import Transport, capture_tls_chain


@dataclass
class CertificateInfo:
    subject_dn: str
    issuer_dn: str
    not_before: datetime
    not_after: datetime
    serial_hex: str
    signature_algorithm: str
    subject_alt_names: list[str] = field(default_factory=list)
    is_self_signed: bool = False


@dataclass
class SslCertificateResult:
    KIND: ClassVar[TraceKind] = TraceKind.SSL_CERTIFICATE

    chain: list[CertificateInfo] = field(default_factory=list)


def _utc(dt: datetime) -> datetime:
    return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)


def decode_certificate(der: bytes) -> CertificateInfo:
    """Structured facts from one DER blob; DNs render in RFC 4514 form."""
    try:
        cert = x509.load_der_x509_certificate(der)
    except ValueError as err:
        raise ProtocolViolationError(f"not an X.509 certificate: {err}") from err
    subject = cert.subject.rfc4514_string()
    issuer = cert.issuer.rfc4514_string()
    try:
        not_before = cert.not_valid_before_utc
        not_after = cert.not_valid_after_utc
    except AttributeError:
        not_before = _utc(cert.not_valid_before)
        not_after = _utc(cert.not_valid_after)
    algorithm_oid = cert.signature_algorithm_oid
    algorithm = getattr(algorithm_oid, "_name", "") or algorithm_oid.dotted_string
    sans: list[str] = []
    try:
        extension = cert.extensions.get_extension_for_class(x509.SubjectAlternativeName)
    except x509.ExtensionNotFound:
        pass
    else:
        for general_name in extension.value:
            value = getattr(general_name, "value", None)
            sans.append(str(value) if value is not None else str(general_name))
    return CertificateInfo(
        subject_dn=subject,
        issuer_dn=issuer,
        not_before=not_before,
        not_after=not_after,
        serial_hex=format(cert.serial_number, "x"),
        signature_algorithm=algorithm,
        subject_alt_names=sans,
        is_self_signed=subject == issuer,
    )


def run_ssl_certificate(transport: Transport, target: Target, clock: Clock | None = None) -> TraceResult:
    clock = clock or SystemClock()

    def body():
        blobs = capture_tls_chain(transport, target.host, target.https_port)
        if not blobs:
            raise ProtocolViolationError(f"{target.host}:{target.https_port} presented no certificate")
        chain = [decode_certificate(blob) for blob in blobs]
        return SslCertificateResult(chain=chain), []

    return execute_trace(TraceKind.SSL_CERTIFICATE, target, clock, body)
