#include <string>
#include <string_view>

#include "qgpt/qgen.hpp"

namespace qgpt {

namespace {

constexpr std::string_view kTableSlot = "<{table}>";

// Header extraction + question generation.
constexpr std::string_view kFullPipelinePrompt =
    R"(You are an expert in table data analysis. Given a table with its file name, sheet name, and a portion of its content (first ten rows), your task is to **extract key headers and generate questions** based on the table & headers.

Important Considerations:
- The table may contain nan or Unnamed: values, which represent empty merged cells in the original table. These **should not** be considered as meaningful data points or headers.
- The **true column headers may not always be in the first row or first column**. Carefully analyze the table to identify the correct headers.
- If the table has **multi-level headers**, preserve the hierarchical structure without merging or altering the text.
- If the table has an **irregular header structure** (such as key-value formatted headers where column names are listed separately), extract the correct header names accordingly.
- **Ignore rows that contain mostly empty values (nan, Unnamed:) or placeholders without meaningful data.**
- **Do not generate python code, extract headers and questions on your own.**
- The type of Questions could be one of (lookup, calculate, visualize, reasoning).
- **Generate question using the language of the table.**

Tasks:
1. Extract Header Names:
  - Identify the **true headers** by analyzing the structure of the table.
  - **Exclude** placeholder values like "nan" and "Unnamed:".
  - If the table contains **multi-level headers**, keep them as separate levels without merging.
  - If the table has **key-value headers**, extract the correct column names.
2. Generate Questions (Context-Specific to the Table):
  - Formulate **questions that can only be answered using this specific table**.
  - Ensure **each question involves 1 to 3 different headers** to capture interactions between data & columns.
  - Ensure the header diversity in all the questions.
  - Use '' to mark the headers in the question.
  - **Total number of questions should larger than the half number of extracted headers**

**Output Format (Strictly JSON format)**
Only return a JSON dictionary object with the extracted headers and questions, without any additional explanations or formatting.
{ "headers": ["header1", "header2",
"..."], "questions": ["question1",
"question2", "..."] }

Input Table:
<{table}>)";

// Question generation without header extraction.
constexpr std::string_view kQuestionsOnlyPrompt =
    R"(You are an expert in table data analysis. Given a table with its file name and a portion of its content (first ten rows), your task is to **generate questions** based on the table & headers.

Important Considerations:
- **Do not generate python code, generate questions on your own.**
- The type of Questions could be one of (Numerical, List, Count, Select).
- **Generate question using the language of the table.**

**Tasks:**
- **1. Generate Questions (Context-Specific to the Table):**
- Formulate **questions that can only be answered using this specific table**.
- Ensure **each question involves 1 to 3 different headers** to capture interactions between data & columns.
- Ensure the header diversity in all the questions.
- Use '' to mark the headers in the question.
- **Total number of questions should larger than the half number of extracted headers**

**Output Format (Strictly JSON format)**
Only return a JSON dictionary object with the extracted headers and questions, without any additional explanations or formatting.
{ "questions": ["question1",
"question2","..."]

Input Table:
<{table}>)";

// Not part of the published prompt set; written for this toolkit.
constexpr std::string_view kDescriptionPrompt =
    R"(You are an expert in table data analysis. Given a table with its file name and a portion of its content, write a description of the table in 2 to 4 sentences that summarizes what the table contains and what its columns represent.

**Output Format (Strictly JSON format)**
Only return a JSON dictionary object with a single "description" field, without any additional explanations or formatting.
{ "description": "..." }

Input Table:
<{table}>)";

std::string fill(std::string_view tmpl, const std::string& table) {
  std::string out(tmpl);
  const auto at = out.find(kTableSlot);
  out.replace(at, kTableSlot.size(), table);
  return out;
}

}  // namespace

std::string build_prompt(const PartialTable& pt, GenMode mode, bool include_title) {
  const auto tmpl =
      mode == GenMode::kFullPipeline ? kFullPipelinePrompt : kQuestionsOnlyPrompt;
  return fill(tmpl, to_markdown(pt, include_title));
}

std::string build_description_prompt(const PartialTable& pt, bool include_title) {
  return fill(kDescriptionPrompt, to_markdown(pt, include_title));
}

}  // namespace qgpt
