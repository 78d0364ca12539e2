import { ApiClient } from "./api.js";
import { App } from "./app.js";

const container = document.getElementById("app");
if (container) {
  // Served from the same origin as the service (its static mount), so the
  // /v1 API is reachable with an empty base.
  new App(container, new ApiClient(""));
}
