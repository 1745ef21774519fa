import { describe, expect, it } from "vitest";

import { formatCsv, formatRow, parseCsv } from "../src/csv.js";

describe("parseCsv", () => {
  it("splits plain rows", () => {
    expect(parseCsv("a,b\n1,2\n")).toEqual([["a", "b"], ["1", "2"]]);
  });

  it("handles quoted cells with commas and quotes", () => {
    expect(parseCsv('v,"[0,9]","say ""hi"""\n')).toEqual([
      ["v", "[0,9]", 'say "hi"'],
    ]);
  });

  it("accepts CRLF", () => {
    expect(parseCsv("a,b\r\n1,2\r\n")).toEqual([["a", "b"], ["1", "2"]]);
  });

  it("keeps empty trailing cells", () => {
    expect(parseCsv("a,,\n")).toEqual([["a", "", ""]]);
  });
});

describe("formatRow", () => {
  it("quotes only when needed", () => {
    expect(formatRow(["plain", "[0,9]", 'q"q'])).toBe('plain,"[0,9]","q""q"');
  });
});

describe("round trip", () => {
  it("parse(format(rows)) is identity", () => {
    const rows = [
      ["variable", "recStart"],
      ["MMSE_category", "[0,9]"],
      ["odd", 'a,"b"\nc'],
    ];
    expect(parseCsv(formatCsv(rows))).toEqual(rows);
  });
});
