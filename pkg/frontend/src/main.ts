import { ApiClient } from "./api.js";
import { App } from "./app.js";

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app mount point");
  }
  const app = new App(root, new ApiClient(window.location.origin));
  void app.start().catch((raised) => {
    root.textContent = `Could not reach the play server: ${(raised as Error).message}`;
  });
});
