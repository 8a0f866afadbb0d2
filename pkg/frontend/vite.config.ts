import { defineConfig } from "vite";

// the engine service runs separately; proxy API calls during development
export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      "/api": "http://127.0.0.1:8200",
    },
  },
});
