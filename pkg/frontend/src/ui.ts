// DOM views. Each view is a function that renders into a container and
// wires its controls to the API client. State shared between views lives
// in the App object owned by main.ts.

import { ApiError, HarmonizeClient } from "./api.js";
import { formatRow, parseCsv } from "./csv.js";
import type { JobStatus, ValidationReport } from "./types.js";
import {
  RecodeKind,
  WizardState,
  emptyWizard,
  stagedRows,
  validateWizard,
  variableSheetRow,
} from "./wizard.js";

export interface App {
  client: HarmonizeClient;
  sessionId: string | null;
  columns: string[];
  database: string;
  onSessionChange: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) {
    return err.location ? `${err.message} (${err.location})` : err.message;
  }
  return String(err);
}

function reportBox(report: ValidationReport): HTMLElement {
  const box = el("div", { class: report.ok ? "report ok" : "report bad" });
  box.append(el("strong", {}, report.ok ? "sheets valid" : "sheets invalid"));
  for (const f of report.findings) {
    box.append(el("div", { class: f.severity }, `${f.location}: ${f.message}`));
  }
  return box;
}

function download(name: string, data: Blob | string): void {
  const blob = typeof data === "string" ? new Blob([data], { type: "text/csv" }) : data;
  const url = URL.createObjectURL(blob);
  const a = el("a", { href: url, download: name });
  document.body.append(a);
  a.click();
  a.remove();
  URL.revokeObjectURL(url);
}

// --- connect ---------------------------------------------------------------

export function renderConnect(app: App, root: HTMLElement): void {
  root.replaceChildren();
  const status = el("div", { class: "status" });
  const nameInput = el("input", { placeholder: "Optional dataset name" });
  const dbInput = el("input", { placeholder: "Database name (e.g. paquid)" });
  const pathInput = el("input", { placeholder: "Server-side path to CSV/SQLite" });
  const tableInput = el("input", { placeholder: "Table (SQLite only)" });
  const fileInput = el("input", { type: "file", accept: ".csv" });

  const connect = async (body: Parameters<HarmonizeClient["openSession"]>[0]) => {
    try {
      const info = await app.client.openSession({ ...body, name: nameInput.value || undefined });
      app.sessionId = info.sessionId;
      app.columns = info.columns;
      app.database = dbInput.value.trim() || "db";
      status.textContent =
        `Connected: ${info.datasetName ?? "(unnamed)"} — ` +
        `${info.columns.length} columns` +
        (info.rowCountHint !== null ? `, ~${info.rowCountHint} rows` : "");
      app.onSessionChange();
    } catch (err) {
      status.textContent = errorText(err);
    }
  };

  const connectPath = el("button", {}, "Connect path");
  connectPath.onclick = () => {
    const path = pathInput.value.trim();
    const isDb = /\.(db|sqlite3?)$/.test(path);
    void connect({
      format: isDb ? "sqlite" : "csv",
      location: path,
      table: isDb ? tableInput.value.trim() : undefined,
    });
  };

  fileInput.onchange = async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    void connect({ format: "csv", content: await file.text() });
  };

  root.append(
    el("h2", {}, "Connect a dataset"),
    el("div", { class: "form" }, nameInput, dbInput),
    el("div", { class: "form" }, pathInput, tableInput, connectPath),
    el("div", { class: "form" }, el("label", {}, "or upload a CSV: "), fileInput),
    status,
  );
}

// --- summary ---------------------------------------------------------------

export function renderSummary(app: App, root: HTMLElement): void {
  root.replaceChildren(el("h2", {}, "Variable summary"));
  if (!app.sessionId) {
    root.append(el("p", {}, "Connect a dataset first."));
    return;
  }
  const picker = el("select", {});
  for (const c of app.columns) {
    picker.append(el("option", { value: c }, c));
  }
  const out = el("div", {});
  picker.onchange = async () => {
    try {
      const s = await app.client.summary(app.sessionId!, picker.value);
      const table = el("table", {});
      table.append(
        el("tr", {}, el("th", {}, "value"), el("th", {}, "count")),
        ...s.topCategories.map((c) =>
          el("tr", {}, el("td", {}, c.value), el("td", {}, String(c.count))),
        ),
      );
      const facts = [
        `type: ${s.sniffedType}`,
        `rows: ${s.nRows}`,
        `missing: ${s.nMissing}`,
        `distinct: ${s.distinctCount}`,
      ];
      if (s.numeric) {
        facts.push(
          `min ${s.numeric.min}, max ${s.numeric.max}, ` +
            `mean ${s.numeric.mean.toFixed(3)}, median ${s.numeric.median}`,
        );
      }
      out.replaceChildren(el("p", {}, facts.join(" · ")), table);
    } catch (err) {
      out.replaceChildren(el("p", { class: "bad" }, errorText(err)));
    }
  };
  root.append(picker, out);
  if (app.columns.length) picker.dispatchEvent(new Event("change"));
}

// --- details-sheet editor with the staged-row wizard -----------------------

export function renderSheets(app: App, root: HTMLElement): void {
  root.replaceChildren(el("h2", {}, "Details sheet"));
  if (!app.sessionId) {
    root.append(el("p", {}, "Connect a dataset first."));
    return;
  }
  const sessionId = app.sessionId;
  const sheetBox = el("div", {});
  const reportSlot = el("div", {});

  const refresh = async (report?: ValidationReport) => {
    const csvText = await app.client.getSheet(sessionId, "details");
    const rows = parseCsv(csvText);
    const table = el("table", {});
    rows.forEach((cells, i) => {
      const tr = el("tr", {});
      tr.append(el(i === 0 ? "th" : "td", {}, i === 0 ? "#" : String(i)));
      for (const cell of cells) {
        tr.append(el(i === 0 ? "th" : "td", {}, cell));
      }
      table.append(tr);
    });
    sheetBox.replaceChildren(table);
    if (report) reportSlot.replaceChildren(reportBox(report));
  };

  // wizard form
  const wizard: WizardState = emptyWizard(app.database);
  const problems = el("div", { class: "problems" });
  const submit = el("button", { disabled: "" }, "Add to table");

  const variableInput = el("input", { placeholder: "New variable name" });
  const sourcePicker = el("select", {});
  for (const c of app.columns) sourcePicker.append(el("option", { value: c }, c));
  const kindPicker = el("select", {});
  for (const k of ["remap", "bin", "derived"]) {
    kindPicker.append(el("option", { value: k }, k));
  }
  const countInput = el("input", {
    type: "number", min: "1", placeholder: "Enter the number of categories",
  });
  const rowsBox = el("div", {});
  const elseInput = el("input", {
    placeholder: "Else label (empty for none, NA::b for missing)",
  });

  const syncValidity = () => {
    wizard.database = app.database;
    wizard.variableName = variableInput.value;
    wizard.sourceColumn = sourcePicker.value;
    wizard.kind = kindPicker.value as RecodeKind;
    wizard.elseLabel = elseInput.value;
    const found = validateWizard(wizard);
    problems.replaceChildren(...found.map((p) => el("div", { class: "bad" }, p)));
    if (found.length === 0) {
      submit.removeAttribute("disabled");
    } else {
      submit.setAttribute("disabled", "");
    }
  };

  const rebuildRows = () => {
    const n = Math.max(0, Number(countInput.value) || 0);
    rowsBox.replaceChildren();
    if (kindPicker.value === "bin") {
      wizard.bins = Array.from({ length: n }, (_, i) => wizard.bins[i] ?? {
        low: "", high: "", lowClosed: true, highClosed: true, label: "",
      });
      wizard.bins.forEach((bin, i) => {
        const low = el("input", { placeholder: "low", value: bin.low });
        const high = el("input", { placeholder: "high", value: bin.high });
        const label = el("input", { placeholder: "final category label", value: bin.label });
        low.oninput = () => { bin.low = low.value; syncValidity(); };
        high.oninput = () => { bin.high = high.value; syncValidity(); };
        label.oninput = () => { bin.label = label.value; syncValidity(); };
        rowsBox.append(el("div", { class: "form" },
          el("span", {}, `category ${i + 1}: `), low, high, label));
      });
    } else if (kindPicker.value === "remap") {
      wizard.remap = Array.from({ length: n }, (_, i) => wizard.remap[i] ?? {
        values: "", label: "",
      });
      wizard.remap.forEach((entry, i) => {
        const values = el("input", { placeholder: "source values (comma-sep)", value: entry.values });
        const label = el("input", { placeholder: "category label", value: entry.label });
        values.oninput = () => { entry.values = values.value; syncValidity(); };
        label.oninput = () => { entry.label = label.value; syncValidity(); };
        rowsBox.append(el("div", { class: "form" },
          el("span", {}, `mapping ${i + 1}: `), values, label));
      });
    } else {
      const fn = el("input", { placeholder: "function name", value: wizard.functionName });
      const body = el("input", { placeholder: "expression body", value: wizard.functionBody });
      const comps = el("input", { placeholder: "components (comma-sep)", value: wizard.components.join(",") });
      const feedback = el("span", { class: "hint" });
      fn.oninput = () => { wizard.functionName = fn.value; syncValidity(); };
      comps.oninput = () => {
        wizard.components = comps.value.split(",").map((c) => c.trim()).filter(Boolean);
        syncValidity();
      };
      body.oninput = async () => {
        wizard.functionBody = body.value;
        syncValidity();
        const check = await app.client.checkExpression(body.value);
        feedback.textContent = check.ok ? "expression ok" : `${check.stage}: ${check.message}`;
        feedback.className = check.ok ? "hint ok" : "hint bad";
      };
      rowsBox.append(el("div", { class: "form" }, fn, comps),
                     el("div", { class: "form" }, body, feedback));
    }
    syncValidity();
  };

  variableInput.oninput = syncValidity;
  sourcePicker.onchange = syncValidity;
  elseInput.oninput = syncValidity;
  kindPicker.onchange = rebuildRows;
  countInput.oninput = rebuildRows;

  submit.onclick = async () => {
    await ensureVariableRow(app, sessionId, wizard);
    let report: ValidationReport | undefined;
    for (const row of stagedRows(wizard)) {
      const added = await app.client.addDetailsRow(sessionId, row);
      report = added.report;
    }
    await refresh(report);
  };

  // deletion: "enter the row number to be deleted", 0 keeps everything
  const deleteInput = el("input", { type: "number", min: "0", value: "0" });
  const deleteButton = el("button", {}, "Delete row");
  deleteButton.onclick = async () => {
    try {
      const reply = await app.client.deleteDetailsRow(sessionId, Number(deleteInput.value));
      await refresh(reply.report);
    } catch (err) {
      reportSlot.replaceChildren(el("p", { class: "bad" }, errorText(err)));
    }
  };

  const downloadButton = el("button", {}, "Download details sheet");
  downloadButton.onclick = async () => {
    download("details.csv", await app.client.getSheet(sessionId, "details"));
  };

  root.append(
    el("div", { class: "form" }, variableInput, sourcePicker, kindPicker, countInput),
    rowsBox,
    el("div", { class: "form" }, elseInput, submit),
    problems,
    el("div", { class: "form" }, el("span", {}, "Row number to delete (0 = none): "),
       deleteInput, deleteButton, downloadButton),
    sheetBox,
    reportSlot,
  );
  rebuildRows();
  void refresh();
}

/** The details-rows endpoint only touches the details sheet, so the
 * matching variable-sheet row is appended through the sheet PUT. A no-op
 * when the variable is already declared. */
export async function ensureVariableRow(
  app: App,
  sessionId: string,
  wizard: WizardState,
): Promise<void> {
  const current = await app.client.getSheet(sessionId, "variables");
  const rows = parseCsv(current);
  const header = rows[0];
  const nameCol = header.indexOf("variable");
  const name = wizard.variableName.trim();
  if (rows.slice(1).some((r) => r[nameCol] === name)) {
    return;
  }
  const spec = variableSheetRow(wizard);
  const newRow = header.map((col) => spec[col] ?? "");
  await app.client.putSheet(sessionId, "variables", current + formatRow(newRow) + "\n");
}

// --- DVL browser -----------------------------------------------------------

export function renderDvl(app: App, root: HTMLElement): void {
  root.replaceChildren(el("h2", {}, "Derived variable library"));
  const list = el("div", {});
  const refresh = async () => {
    const entries = await app.client.dvlCatalog();
    const table = el("table", {});
    table.append(el("tr", {},
      ...["name", "version", "components", "function", "type", "hash"].map((h) =>
        el("th", {}, h))));
    for (const entry of entries) {
      table.append(el("tr", {},
        el("td", {}, entry.name),
        el("td", {}, String(entry.version)),
        el("td", {}, entry.components.join(", ")),
        el("td", {}, entry.functionName),
        el("td", {}, entry.outputType),
        el("td", {}, entry.contentHash.slice(0, 12))));
    }
    list.replaceChildren(table);
  };

  const docButton = el("button", {}, "Download derived variables documentation");
  docButton.onclick = async () => {
    if (!app.sessionId) return;
    download("derived-doc.csv", await app.client.derivedDoc(app.sessionId));
  };

  root.append(docButton, list);
  void refresh();
}

// --- recode ----------------------------------------------------------------

export function renderRecode(app: App, root: HTMLElement): void {
  root.replaceChildren(el("h2", {}, "Recode the dataset"));
  if (!app.sessionId) {
    root.append(el("p", {}, "Connect a dataset first."));
    return;
  }
  const sessionId = app.sessionId;
  const selectInput = el("input", { placeholder: "Variables to recode (comma-sep)" });
  const passInput = el("input", { placeholder: "Passthrough columns (comma-sep)" });
  const dvlInput = el("input", { placeholder: "DVL variables to apply (comma-sep)" });
  const formatPicker = el("select", {},
    el("option", { value: "csv" }, "csv"),
    el("option", { value: "sqlite" }, "sqlite"));
  const progress = el("div", { class: "status" });
  const run = el("button", {}, "Recode the dataset");

  const split = (v: string) => v.split(",").map((s) => s.trim()).filter(Boolean);

  run.onclick = async () => {
    run.setAttribute("disabled", "");
    progress.textContent = "starting…";
    try {
      const jobId = await app.client.startRecode(sessionId, {
        database: app.database,
        selected: split(selectInput.value),
        passthrough: split(passInput.value),
        dvlNames: split(dvlInput.value),
        outputFormat: formatPicker.value as "csv" | "sqlite",
      });
      const final = await app.client.waitForJob(jobId, (s: JobStatus) => {
        progress.textContent = `${s.state}: ${s.progressRows} rows`;
      });
      if (final.state === "error") {
        progress.textContent = `failed: ${final.error}`;
      } else {
        progress.textContent =
          `done: ${final.stats?.rowsOut ?? "?"} rows — downloading`;
        const ext = formatPicker.value === "sqlite" ? "db" : "csv";
        download(`recoded.${ext}`, await app.client.jobResult(jobId));
      }
    } catch (err) {
      progress.textContent = errorText(err);
    } finally {
      run.removeAttribute("disabled");
    }
  };

  const sheets = el("button", {}, "Download both sheets");
  sheets.onclick = async () => {
    download("variables.csv", await app.client.getSheet(sessionId, "variables"));
    download("details.csv", await app.client.getSheet(sessionId, "details"));
  };

  root.append(
    el("div", { class: "form" }, selectInput),
    el("div", { class: "form" }, passInput),
    el("div", { class: "form" }, dvlInput, formatPicker),
    el("div", { class: "form" }, run, sheets),
    progress,
  );
}
