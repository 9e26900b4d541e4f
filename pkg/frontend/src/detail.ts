/** Topic detail pane: full keyword profile, yearly activity, note editor. */

import { ApiClient, TopicSummary } from "./api.js";
import { clear, el, svgEl } from "./dom.js";

const SPARK_WIDTH = 240;
const SPARK_HEIGHT = 48;

export interface DetailHandle {
  show(topicId: number): Promise<void>;
}

function yearlySparkline(counts: Record<string, number>): SVGSVGElement {
  const years = Object.keys(counts).sort();
  const svg = svgEl("svg", {
    class: "yearly-spark",
    viewBox: `0 0 ${SPARK_WIDTH} ${SPARK_HEIGHT}`,
    width: String(SPARK_WIDTH),
    height: String(SPARK_HEIGHT),
  });
  if (years.length === 0) return svg;
  const peak = Math.max(...years.map((y) => counts[y]), 1);
  const barWidth = SPARK_WIDTH / years.length;
  years.forEach((year, i) => {
    const h = (counts[year] / peak) * (SPARK_HEIGHT - 2);
    const rect = svgEl("rect", {
      x: String(i * barWidth + 1),
      y: String(SPARK_HEIGHT - h),
      width: String(Math.max(barWidth - 2, 1)),
      height: String(h),
      class: "spark-bar",
    });
    const title = svgEl("title");
    title.textContent = `${year}: ${counts[year]}`;
    rect.append(title);
    svg.append(rect);
  });
  return svg;
}

function keywordList(label: string, entries: { keyword: string; score: number }[]) {
  const items = entries.map((entry) =>
    el("li", {}, [
      el("span", { class: "kw" }, [entry.keyword]),
      el("span", { class: "kw-score" }, [entry.score.toFixed(3)]),
    ]),
  );
  return el("div", { class: "keyword-lane" }, [
    el("h3", {}, [`${label} (${entries.length})`]),
    el("ol", {}, items),
  ]);
}

export function mountDetail(container: HTMLElement, api: ApiClient): DetailHandle {
  async function show(topicId: number): Promise<void> {
    const topic: TopicSummary = await api.getTopic(topicId);
    clear(container);

    const note = el("textarea", { class: "note-editor", rows: "3" });
    note.value = topic.note;
    const saveNote = el("button", { class: "save-note" }, ["save note"]);
    const saved = el("span", { class: "note-saved" }, [""]);
    saveNote.addEventListener("click", () => {
      saveNote.disabled = true;
      api
        .patchSelection(topicId, { note: note.value })
        .then((state) => {
          saved.textContent = state.updated_at ? `saved ${state.updated_at}` : "saved";
        })
        .catch((error) => {
          saved.textContent = `save failed: ${error.message}`;
        })
        .finally(() => {
          saveNote.disabled = false;
        });
    });

    container.append(
      el("h2", {}, [`topic ${topic.topic_id}`]),
      el("p", { class: "topic-meta" }, [
        `${topic.size} publications, ${topic.selected ? "selected" : "not selected"}`,
      ]),
      yearlySparkline(topic.yearly_counts),
      el(
        "div",
        { class: "keyword-lanes" },
        Object.entries(topic.keywords).map(([label, entries]) =>
          keywordList(label, entries),
        ),
      ),
      el("div", { class: "note-block" }, [note, saveNote, saved]),
    );
  }

  return { show };
}
