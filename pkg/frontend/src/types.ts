// Shapes returned by the harmonize HTTP API.

export interface SessionInfo {
  sessionId: string;
  columns: string[];
  rowCountHint: number | null;
  datasetName: string | null;
}

export interface TopCategory {
  value: string;
  count: number;
}

export interface VariableSummary {
  name: string;
  sniffedType: "numericLike" | "textLike" | "mixed";
  nRows: number;
  nMissing: number;
  distinctCount: number;
  topCategories: TopCategory[];
  numeric: { min: number; max: number; mean: number; median: number } | null;
}

export interface Finding {
  severity: "error" | "warning";
  location: string;
  message: string;
}

export interface ValidationReport {
  ok: boolean;
  findings: Finding[];
}

export interface RowAdded {
  rowIndex: number;
  variable: string;
  report: ValidationReport;
}

export interface JobStatus {
  state: "queued" | "running" | "done" | "error";
  progressRows: number;
  stats: { rowsIn: number; rowsOut: number } | null;
  error: string | null;
}

export interface DvlEntry {
  name: string;
  version: number;
  contentHash: string;
  author: string;
  createdAt: string;
  components: string[];
  functionName: string;
  outputType: string;
}

export interface DvlSpec {
  name: string;
  components: string[];
  functionName: string;
  functionBody: string;
  outputType: "categorical" | "continuous";
  notes?: string;
  author?: string;
}

export interface ExprCheckResult {
  ok: boolean;
  stage?: "parse" | "typecheck";
  message?: string;
  outputType?: string | null;
}

export interface RecodeRequest {
  database: string;
  selected: string[];
  passthrough?: string[];
  outputFormat?: "csv" | "sqlite";
  outputTable?: string;
  chunkSize?: number;
  dvlNames?: string[];
  strictUnmatched?: boolean;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  location?: string;
}
