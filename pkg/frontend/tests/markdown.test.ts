import { describe, expect, it } from "vitest";

import { renderMarkdown } from "../src/markdown";

describe("renderMarkdown", () => {
  it("renders the three-section report shape", () => {
    const html = renderMarkdown(
      "## Image Type\nOCT scan.\n\n## Imaging Findings\n- intact layers\n- no fluid\n\n## Diagnostic Suggestions\n**Normal** study."
    );
    expect(html).toContain("<h2>Image Type</h2>");
    expect(html).toContain("<li>intact layers</li>");
    expect(html).toContain("<strong>Normal</strong>");
    expect(html).toContain("<p>OCT scan.</p>");
  });

  it("escapes html in untrusted reports", () => {
    const html = renderMarkdown('<script>alert("x")</script>\n<img src=x onerror=steal()>');
    expect(html).not.toContain("<script>");
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;script&gt;");
  });

  it("escapes html inside markup captures", () => {
    const html = renderMarkdown("## <b>heading</b>\n**<i>bold</i>**");
    expect(html).toContain("&lt;b&gt;heading&lt;/b&gt;");
    expect(html).toContain("<strong>&lt;i&gt;bold&lt;/i&gt;</strong>");
  });

  it("joins wrapped lines into one paragraph", () => {
    const html = renderMarkdown("first line\nsecond line\n\nnext para");
    expect(html).toContain("<p>first line second line</p>");
    expect(html).toContain("<p>next para</p>");
  });
});
