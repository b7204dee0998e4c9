// Client-side target validation with the same hostname rules the engine
// applies: submission stays disabled until these pass.

const LABEL_RE = /^[a-z0-9]([a-z0-9-]*[a-z0-9])?$/;
const MAX_HOST_LENGTH = 253;
const MAX_LABEL_LENGTH = 63;

export function normalizeTarget(raw: string): string {
  let host = raw.trim().toLowerCase();
  for (const scheme of ["http://", "https://"]) {
    if (host.startsWith(scheme)) {
      host = host.slice(scheme.length);
      break;
    }
  }
  host = host.split("/", 1)[0];
  while (host.endsWith(".")) {
    host = host.slice(0, -1);
  }
  return host;
}

export function isValidTarget(raw: string): boolean {
  const host = normalizeTarget(raw);
  if (!host || host.length > MAX_HOST_LENGTH) {
    return false;
  }
  return host.split(".").every(
    (label) => label.length >= 1 && label.length <= MAX_LABEL_LENGTH && LABEL_RE.test(label),
  );
}

export function isValidPort(value: number | null): boolean {
  return value === null || (Number.isInteger(value) && value >= 1 && value <= 65535);
}
