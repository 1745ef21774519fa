import { HarmonizeClient } from "./api.js";
import {
  App,
  renderConnect,
  renderDvl,
  renderRecode,
  renderSheets,
  renderSummary,
} from "./ui.js";

const TABS: [string, (app: App, root: HTMLElement) => void][] = [
  ["Connect", renderConnect],
  ["Summary", renderSummary],
  ["Details sheet", renderSheets],
  ["Derived variables", renderDvl],
  ["Recode", renderRecode],
];

window.addEventListener("load", () => {
  const nav = document.getElementById("nav") as HTMLElement;
  const content = document.getElementById("content") as HTMLElement;

  let active = 0;
  const app: App = {
    client: new HarmonizeClient(""),
    sessionId: null,
    columns: [],
    database: "db",
    onSessionChange: () => show(active),
  };

  const show = (index: number) => {
    active = index;
    for (let i = 0; i < nav.children.length; i++) {
      nav.children[i].className = i === index ? "active" : "";
    }
    TABS[index][1](app, content);
  };

  TABS.forEach(([label], i) => {
    const button = document.createElement("button");
    button.textContent = label;
    button.onclick = () => show(i);
    nav.append(button);
  });
  show(0);
});
