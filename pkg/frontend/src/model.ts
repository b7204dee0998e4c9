// Types mirroring the service's JSON wire format.

export const TRACE_KINDS = [
  "ServerInfo",
  "SslCertificate",
  "Dns",
  "Whois",
  "Metadata",
  "PageContent",
  "MaliciousActivity",
  "MaliciousRelations",
] as const;

export type TraceKindName = (typeof TRACE_KINDS)[number];

export interface AppConfigJson {
  checkConnectionURL: string;
  googleSafeBrowsingKey: string;
  proxy: { host: string; port: number };
}

export interface JobView {
  jobId: string;
  target: string;
  state: "Pending" | "Running" | "Done" | "Failed";
  kinds: string[];
  progress: Record<string, { state: string; pagesVisited?: number; maxPages?: number }>;
  error: string | null;
}

export interface GeoJson {
  status: string;
  country: string;
  countryCode: string;
  region: string;
  regionName: string;
  city: string;
  zip: string;
  lat: number;
  lon: number;
  timezone: string;
  isp: string;
  org: string;
  asField: string;
  query: string;
}

export interface TraceResultJson {
  kind: string;
  target: string;
  httpPort: number;
  httpsPort: number;
  status: "Success" | "PartialFailure" | "Failure";
  startedAt: string;
  finishedAt: string;
  warnings: string[];
  payload: any | null;
}

export interface JobResultJson {
  jobId: string;
  state: string;
  results: TraceResultJson[];
}

export interface SearchTextParam {
  text: string;
  caseSensitive: boolean;
}

export interface QueryFormState {
  target: string;
  httpPort: number | null;
  httpsPort: number | null;
  selectedKinds: TraceKindName[];
  searchTexts: SearchTextParam[];
  dictionaryFile: string;
}

export function emptyForm(): QueryFormState {
  return {
    target: "",
    httpPort: null,
    httpsPort: null,
    selectedKinds: [...TRACE_KINDS],
    searchTexts: [],
    dictionaryFile: "",
  };
}
