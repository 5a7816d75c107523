import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
  },
  server: {
    port: 5173,
  },
  test: {
    environment: "happy-dom",
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
