// Result panels: one renderer per trace kind plus a generic key/value
// fallback so kinds added to the service later still display.
//
// Discovered IPs, hostnames and external URLs render as .pivot elements
// carrying data-pivot="<host>"; clicking one seeds the next query.

import type { TraceResultJson } from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function hostOfUrl(url: string): string {
  try {
    return new URL(url).hostname;
  } catch {
    return url;
  }
}

function pivot(value: string, host?: string): string {
  const pivotHost = host ?? value;
  return `<a class="pivot" href="#" data-pivot="${escapeHtml(pivotHost)}">${escapeHtml(value)}</a>`;
}

function row(label: string, value: string): string {
  return `<tr><th>${escapeHtml(label)}</th><td>${value}</td></tr>`;
}

function table(rows: string[]): string {
  return rows.length ? `<table class="kv">${rows.join("")}</table>` : "";
}

function section(title: string, body: string): string {
  return body ? `<h4>${escapeHtml(title)}</h4>${body}` : "";
}

function renderServerInfo(payload: any): string {
  const blocks = (payload.addresses ?? []).map((info: any) => {
    const rows = [row("IP", pivot(info.ip))];
    if (info.serverBanner) {
      rows.push(row("Server", escapeHtml(info.serverBanner)));
    }
    if (info.geo) {
      rows.push(
        row("Location", escapeHtml(`${info.geo.city} ${info.geo.zip}, ${info.geo.regionName}, ${info.geo.country}`)),
        row("Coordinates", escapeHtml(`${info.geo.lat}, ${info.geo.lon}`)),
        row("ISP", escapeHtml(info.geo.isp)),
        row("AS", escapeHtml(info.geo.asField)),
      );
    }
    return table(rows);
  });
  return blocks.join("") || "<p>no addresses</p>";
}

function renderSslCertificate(payload: any): string {
  const blocks = (payload.chain ?? []).map((cert: any, index: number) => {
    const rows = [
      row("Subject", escapeHtml(cert.subjectDn)),
      row("Issuer", escapeHtml(cert.issuerDn)),
      row("Valid", escapeHtml(`${cert.notBefore} to ${cert.notAfter}`)),
      row("Serial", escapeHtml(cert.serialHex)),
      row("Algorithm", escapeHtml(cert.signatureAlgorithm)),
      row("Self-signed", cert.isSelfSigned ? "yes" : "no"),
    ];
    if (cert.subjectAltNames?.length) {
      rows.push(row("Alt names", cert.subjectAltNames.map((n: string) => pivot(n)).join(", ")));
    }
    return section(`Certificate ${index}`, table(rows));
  });
  return blocks.join("") || "<p>empty chain</p>";
}

function renderDns(payload: any): string {
  const records = (payload.records ?? [])
    .map((r: any) =>
      `<tr><td>${pivot(r.name)}</td><td>${escapeHtml(r.rtype)}</td>` +
      `<td>${r.ttl}</td><td>${escapeHtml(r.rdata)}</td></tr>`)
    .join("");
  const chains = (payload.cnameChains ?? [])
    .map((c: any) => {
      const names = c.names.map((n: string) => escapeHtml(n)).join(" → ");
      return `<li>${names}${c.truncated ? " (truncated)" : ""}</li>`;
    })
    .join("");
  const hosts = (payload.enumeratedHosts ?? []).map((h: string) => `<li>${pivot(h)}</li>`).join("");
  const reverse = Object.entries(payload.reverseNames ?? {})
    .map(([ip, name]) => row(ip, name ? pivot(String(name)) : "<em>none</em>"))
    .join("");
  return [
    section("Records", records
      ? `<table class="kv"><tr><th>Name</th><th>Type</th><th>TTL</th><th>Data</th></tr>${records}</table>`
      : ""),
    section("CNAME chains", chains ? `<ul>${chains}</ul>` : ""),
    section("Enumerated hosts", hosts ? `<ul>${hosts}</ul>` : ""),
    section("Reverse lookups", table(reverse ? [reverse] : [])),
  ].join("");
}

function renderWhois(payload: any): string {
  const rows = [
    row("Queried server", escapeHtml(payload.queriedServer ?? "")),
    row("Referral chain", escapeHtml((payload.referralChain ?? []).join(" → "))),
  ];
  for (const [key, field] of Object.entries<any>(payload.fields ?? {})) {
    rows.push(row(field.displayKey ?? key, field.values.map(escapeHtml).join("<br>")));
  }
  const raw = `<details><summary>raw response</summary><pre>${escapeHtml(payload.raw ?? "")}</pre></details>`;
  return table(rows) + raw;
}

function renderMultimap(map: Record<string, string[]>): string {
  return table(Object.entries(map ?? {}).map(([key, values]) =>
    row(key, values.map(escapeHtml).join("<br>"))));
}

function renderMetadata(payload: any): string {
  const rows: string[] = [];
  if (payload.charset) {
    rows.push(row("charset", escapeHtml(payload.charset)));
  }
  const unparsed = (payload.robots?.unparsed ?? [])
    .map(([line, text]: [number, string]) => `<li>line ${line}: <code>${escapeHtml(text)}</code></li>`)
    .join("");
  return [
    table(rows),
    section("http-equiv", renderMultimap(payload.httpEquiv)),
    section("named meta", renderMultimap(payload.named)),
    section("robots.txt", renderMultimap(payload.robots?.entries ?? {})),
    section("robots.txt unparsed", unparsed ? `<ul>${unparsed}</ul>` : ""),
  ].join("");
}

function renderPageContent(payload: any): string {
  const hits = Object.entries<any>(payload.hits ?? {})
    .map(([name, entries]) => {
      const items = entries
        .map((h: any) => `<li><code>${escapeHtml(h.text)}</code> <small>${escapeHtml(h.sourceUrl)}</small></li>`)
        .join("");
      return section(name, `<ul>${items}</ul>`);
    })
    .join("");
  const relations = (payload.externalRelations ?? [])
    .map((url: string) => `<li>${pivot(url, hostOfUrl(url))}</li>`)
    .join("");
  const images = (payload.imageUrls ?? []).map((url: string) => `<li>${escapeHtml(url)}</li>`).join("");
  return [
    `<p>${payload.pagesVisited ?? 0} pages visited</p>`,
    hits,
    section("External relations", relations ? `<ul class="relations">${relations}</ul>` : ""),
    section("Images", images ? `<ul>${images}</ul>` : ""),
  ].join("");
}

function renderVerdict(activity: any): string {
  const sb = activity.safeBrowsing ?? { available: false };
  const dnsbl = activity.dnsbl ?? { available: false };
  const sbText = !sb.available
    ? "unavailable"
    : sb.listed
      ? `listed (${(sb.threatTypes ?? []).join(", ")})`
      : "not listed";
  const dnsblText = !dnsbl.available
    ? "unavailable"
    : dnsbl.listed
      ? `listed (${(dnsbl.returnedAddresses ?? []).join(", ")})`
      : "not listed";
  return table([row("Safe browsing", escapeHtml(sbText)), row("DNSBL", escapeHtml(dnsblText))]);
}

function renderMaliciousRelations(payload: any): string {
  const blocks = Object.entries<any>(payload.perUrl ?? {}).map(
    ([url, activity]) => section(url, renderVerdict(activity)));
  return blocks.join("") || "<p>no external relations found</p>";
}

function renderGeneric(payload: any): string {
  // fallback panel for trace kinds this console does not know yet
  return `<pre class="generic">${escapeHtml(JSON.stringify(payload, null, 2))}</pre>`;
}

const RENDERERS: Record<string, (payload: any) => string> = {
  ServerInfo: renderServerInfo,
  SslCertificate: renderSslCertificate,
  Dns: renderDns,
  Whois: renderWhois,
  Metadata: renderMetadata,
  PageContent: renderPageContent,
  MaliciousActivity: renderVerdict,
  MaliciousRelations: renderMaliciousRelations,
};

export function renderPanel(result: TraceResultJson): string {
  const statusClass = result.status.toLowerCase();
  const warnings = result.warnings
    .map((w) => `<p class="warning">${escapeHtml(w)}</p>`)
    .join("");
  const body = result.payload === null
    ? "<p>no data</p>"
    : (RENDERERS[result.kind] ?? renderGeneric)(result.payload);
  return (
    `<section class="panel" data-kind="${escapeHtml(result.kind)}">` +
    `<h3>${escapeHtml(result.kind)} <span class="chip ${statusClass}">${escapeHtml(result.status)}</span></h3>` +
    warnings + body +
    "</section>"
  );
}

export function renderProgressChips(
  progress: Record<string, { state: string; pagesVisited?: number; maxPages?: number }>,
): string {
  return Object.entries(progress)
    .map(([kind, info]) => {
      const counter =
        kind === "PageContent" && info.pagesVisited !== undefined
          ? ` ${info.pagesVisited}/${info.maxPages ?? "?"}`
          : "";
      return `<span class="chip ${info.state.toLowerCase()}" data-kind="${escapeHtml(kind)}">` +
        `${escapeHtml(kind)}: ${escapeHtml(info.state)}${counter}</span>`;
    })
    .join(" ");
}
