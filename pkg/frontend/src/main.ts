/** Application entry: compose the panes against the same-origin API. */

import { ApiClient } from "./api.js";
import { mountAnalytics } from "./analytics.js";
import { mountDendrogram } from "./dendro.js";
import { mountDetail } from "./detail.js";
import { mountJobs } from "./jobs.js";
import { mountPatents } from "./patents.js";
import { mountTopicTable } from "./topicTable.js";

export interface App {
  refreshAll(): Promise<void>;
}

export function bootstrap(root: HTMLElement, api = new ApiClient()): App {
  root.innerHTML = `
    <header><h1>topic curation</h1></header>
    <main>
      <section id="topics-pane"><h2>topics</h2><div id="topic-table"></div></section>
      <section id="detail-pane"></section>
      <section id="link-pane">
        <h2>patent linkage</h2>
        <div id="jobs"></div>
        <div id="patents"></div>
      </section>
      <section id="viz-pane">
        <h2>topic dendrogram</h2>
        <div id="dendro"></div>
        <h2>analytics</h2>
        <div id="analytics"></div>
      </section>
    </main>
  `;
  const pane = (id: string): HTMLElement => {
    const node = root.querySelector<HTMLElement>(`#${id}`);
    if (node === null) throw new Error(`missing pane #${id}`);
    return node;
  };

  const detail = mountDetail(pane("detail-pane"), api);
  const patents = mountPatents(pane("patents"), api);
  const analytics = mountAnalytics(pane("analytics"), api);
  const dendro = mountDendrogram(pane("dendro"), api);

  const table = mountTopicTable(pane("topic-table"), api, (topicId) => {
    void detail.show(topicId);
    void patents.show(topicId);
  });

  mountJobs(pane("jobs"), api, () => {
    void patents.refresh();
    void analytics.refresh();
  });

  async function refreshAll(): Promise<void> {
    await table.refresh();
    await dendro.refresh();
    await analytics.refresh();
  }

  void refreshAll();
  return { refreshAll };
}

const rootNode = document.getElementById("app");
if (rootNode !== null) {
  bootstrap(rootNode);
}
