/** Analytics pane: horizontal bar tables for the count breakdowns. */

import { ApiClient } from "./api.js";
import { clear, el, fmtCount } from "./dom.js";

interface CountRow {
  count: number;
  [key: string]: string | number;
}

const TABLES: { table: string; title: string; key: string }[] = [
  { table: "by-country", title: "matched patents by applicant country", key: "applicant_country" },
  { table: "by-field", title: "matched patents by technology field", key: "tech_field" },
  { table: "by-topic", title: "matched patents by topic", key: "topic" },
];

const MAX_ROWS = 12;

function barTable(title: string, key: string, rows: CountRow[]): HTMLElement {
  const shown = rows.slice(0, MAX_ROWS);
  const peak = Math.max(...shown.map((r) => r.count), 1e-9);
  const body = shown.map((row) =>
    el("div", { class: "bar-row" }, [
      el("span", { class: "bar-label" }, [String(row[key])]),
      el("span", {
        class: "bar-fill",
        style: `width:${Math.max((row.count / peak) * 100, 1)}%`,
      }),
      el("span", { class: "bar-count" }, [fmtCount(row.count)]),
    ]),
  );
  return el("div", { class: "bar-table", "data-table": key }, [
    el("h3", {}, [title]),
    ...body,
  ]);
}

export interface AnalyticsHandle {
  refresh(): Promise<void>;
}

export function mountAnalytics(container: HTMLElement, api: ApiClient): AnalyticsHandle {
  async function refresh(): Promise<void> {
    clear(container);
    for (const spec of TABLES) {
      try {
        const rows = await api.getAnalytics<CountRow[]>(spec.table);
        const sorted = [...rows].sort((a, b) => b.count - a.count);
        container.append(barTable(spec.title, spec.key, sorted));
      } catch {
        // table not computed yet; skip silently, the pane refreshes after jobs
      }
    }
  }

  return { refresh };
}
