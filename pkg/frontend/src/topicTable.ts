/** Topic overview table with per-row selection checkboxes.
 *
 * One row per topic from GET /topics. The checkbox PATCHes the
 * selection immediately and reflects the server's answer, so what the
 * user sees is always the persisted state, not an optimistic guess.
 */

import { ApiClient, TopicSummary } from "./api.js";
import { clear, el } from "./dom.js";

const PREVIEW_KEYWORDS = 5;

export interface TopicTableHandle {
  refresh(): Promise<void>;
  readonly topics: TopicSummary[];
}

function previewText(topic: TopicSummary): string {
  const ranked = topic.keywords["Method"] ?? [];
  const fallback = topic.keywords["Task"] ?? [];
  const pool = ranked.length > 0 ? ranked : fallback;
  return pool
    .slice(0, PREVIEW_KEYWORDS)
    .map((entry) => entry.keyword)
    .join(", ");
}

export function mountTopicTable(
  container: HTMLElement,
  api: ApiClient,
  onPick: (topicId: number) => void,
): TopicTableHandle {
  let topics: TopicSummary[] = [];

  const body = el("tbody");
  const table = el("table", { class: "topic-table" }, [
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["sel"]),
        el("th", {}, ["topic"]),
        el("th", {}, ["size"]),
        el("th", {}, ["keywords"]),
        el("th", {}, ["note"]),
      ]),
    ]),
    body,
  ]);
  container.append(table);

  function row(topic: TopicSummary): HTMLTableRowElement {
    const checkbox = el("input", {
      type: "checkbox",
      "data-topic": String(topic.topic_id),
    });
    checkbox.checked = topic.selected;
    checkbox.addEventListener("change", () => {
      checkbox.disabled = true;
      api
        .patchSelection(topic.topic_id, { selected: checkbox.checked })
        .then((state) => {
          topic.selected = state.selected;
          checkbox.checked = state.selected;
        })
        .catch(() => {
          checkbox.checked = topic.selected;
        })
        .finally(() => {
          checkbox.disabled = false;
        });
    });

    const tr = el("tr", { "data-topic": String(topic.topic_id) }, [
      el("td", {}, [checkbox]),
      el("td", { class: "topic-id" }, [String(topic.topic_id)]),
      el("td", {}, [String(topic.size)]),
      el("td", { class: "keywords" }, [previewText(topic)]),
      el("td", { class: "note-flag" }, [topic.note ? "*" : ""]),
    ]);
    tr.addEventListener("click", (event) => {
      if (event.target instanceof HTMLInputElement) return;
      onPick(topic.topic_id);
    });
    return tr;
  }

  async function refresh(): Promise<void> {
    topics = await api.listTopics();
    clear(body);
    for (const topic of topics) {
      body.append(row(topic));
    }
  }

  return {
    refresh,
    get topics() {
      return topics;
    },
  };
}
