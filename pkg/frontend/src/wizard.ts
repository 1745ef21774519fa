// Staged-row wizard: turns the guided form state into details-sheet rows.
// Validation here mirrors the server's sheet rules so the submit button
// only enables for rows the server would accept; the server remains the
// authority and its report is still shown after every mutation.

export type RecodeKind = "remap" | "bin" | "derived";

export interface RemapEntry {
  /** Comma-separated source values, e.g. "1" or "1,2". */
  values: string;
  label: string;
}

export interface BinEntry {
  low: string;
  high: string;
  lowClosed: boolean;
  highClosed: boolean;
  label: string;
  shortLabel?: string;
}

export interface WizardState {
  database: string;
  /** "Choose a variable to be recoded" */
  sourceColumn: string;
  /** Name of the harmonized variable being created. */
  variableName: string;
  kind: RecodeKind;
  remap: RemapEntry[];
  bins: BinEntry[];
  /** Label for values no rule matched; empty means no else row.
   * "NA::b" marks them missing. */
  elseLabel: string;
  // derived-variable form
  functionName: string;
  functionBody: string;
  components: string[];
  outputType: "categorical" | "continuous";
}

export function emptyWizard(database = ""): WizardState {
  return {
    database,
    sourceColumn: "",
    variableName: "",
    kind: "remap",
    remap: [],
    bins: [],
    elseLabel: "",
    functionName: "",
    functionBody: "",
    components: [],
    outputType: "categorical",
  };
}

export type RowSpec = Record<string, string>;

const NUMBER = /^-?(\d+(\.\d+)?|\.\d+)$/;

function intervalText(bin: BinEntry): string {
  const open = bin.lowClosed ? "[" : "(";
  const close = bin.highClosed ? "]" : ")";
  return `${open}${bin.low},${bin.high}${close}`;
}

/** Problems that would make the staged rows unsubmittable; submit is
 * enabled only when this comes back empty. */
export function validateWizard(state: WizardState): string[] {
  const problems: string[] = [];
  if (!state.database.trim()) problems.push("database name is required");
  if (!state.variableName.trim()) problems.push("variable name is required");

  if (state.kind === "derived") {
    if (state.components.length === 0) {
      problems.push("a derived variable needs at least one component");
    }
    if (new Set(state.components).size !== state.components.length) {
      problems.push("components must be unique");
    }
    if (!state.functionName.trim()) problems.push("function name is required");
    if (!state.functionBody.trim()) problems.push("function body is required");
    return problems;
  }

  if (!state.sourceColumn.trim()) problems.push("choose a variable to be recoded");

  if (state.kind === "remap") {
    if (state.remap.length === 0) problems.push("add at least one mapping");
    state.remap.forEach((entry, i) => {
      const values = entry.values.split(",").map((v) => v.trim());
      if (values.some((v) => v === "")) {
        problems.push(`mapping ${i + 1}: source values must be nonempty`);
      }
      if (new Set(values).size !== values.length) {
        problems.push(`mapping ${i + 1}: duplicate source value`);
      }
      if (!entry.label.trim()) {
        problems.push(`mapping ${i + 1}: category label is required`);
      }
    });
  }

  if (state.kind === "bin") {
    if (state.bins.length === 0) problems.push("enter at least one category");
    state.bins.forEach((bin, i) => {
      if (!NUMBER.test(bin.low.trim()) || !NUMBER.test(bin.high.trim())) {
        problems.push(`category ${i + 1}: bounds must be numbers`);
        return;
      }
      const low = Number(bin.low);
      const high = Number(bin.high);
      if (low > high || (low === high && !(bin.lowClosed && bin.highClosed))) {
        problems.push(`category ${i + 1}: empty interval ${intervalText(bin)}`);
      }
      if (!bin.label.trim()) {
        problems.push(`category ${i + 1}: final category label is required`);
      }
    });
  }
  return problems;
}

/** The details-sheet rows this wizard state stands for, in sheet order.
 * Only call when validateWizard returned no problems. */
export function stagedRows(state: WizardState): RowSpec[] {
  const base = {
    variable: state.variableName.trim(),
    databaseStart: state.database.trim(),
  };
  if (state.kind === "derived") {
    return [
      {
        ...base,
        typeEnd: state.outputType,
        typeStart: "categorical",
        variableStart: `DerivedVar::[${state.components.join(",")}]`,
        recEnd: `Func::${state.functionName.trim()}`,
        recStart: state.functionBody.trim(),
      },
    ];
  }

  const source = `${state.database.trim()}::${state.sourceColumn.trim()}`;
  const rows: RowSpec[] = [];
  if (state.kind === "remap") {
    for (const entry of state.remap) {
      rows.push({
        ...base,
        typeEnd: "categorical",
        typeStart: "categorical",
        variableStart: source,
        recEnd: entry.label.trim(),
        recStart: entry.values,
      });
    }
  } else {
    for (const bin of state.bins) {
      rows.push({
        ...base,
        typeEnd: "categorical",
        typeStart: "continuous",
        variableStart: source,
        recEnd: bin.label.trim(),
        catLabel: bin.shortLabel ?? "",
        recStart: intervalText(bin),
      });
    }
  }
  if (state.elseLabel.trim()) {
    rows.push({
      ...base,
      typeEnd: "categorical",
      typeStart: state.kind === "bin" ? "continuous" : "categorical",
      variableStart: source,
      recEnd: state.elseLabel.trim(),
      recStart: "else",
    });
  }
  return rows;
}

/** Variable-sheet row matching the staged recode, for sessions where the
 * variable sheet is built alongside the details sheet. */
export function variableSheetRow(state: WizardState): RowSpec {
  const derived = state.kind === "derived";
  return {
    variable: state.variableName.trim(),
    variableType: derived ? state.outputType : "categorical",
    databaseStart: state.database.trim(),
    variableStart: derived
      ? `DerivedVar::[${state.components.join(",")}]`
      : `${state.database.trim()}::${state.sourceColumn.trim()}`,
  };
}
