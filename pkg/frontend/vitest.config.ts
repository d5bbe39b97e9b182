import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // app.test.ts opts into jsdom with a per-file docblock
    environment: "node",
  },
});
