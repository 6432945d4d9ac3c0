import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // the e2e suite boots the real service; run it via `npm run e2e`
    exclude: ["tests/e2e.test.ts", "**/node_modules/**"],
  },
});
