"""Prompt templates for every teacher-assisted step.

Kept in one module so fixture transcripts can be authored against the exact
strings the pipelines send. Changing any template invalidates recorded
fixtures, so treat these as part of the wire format.
"""

SELF_INSTRUCT = """\
You are generating supervised training data for a chat assistant.

A user asked the assistant to learn the following:
{seed}

Write {n} diverse instruction/output pairs that teach the assistant this.
Use exactly this form, one numbered block per pair:

1. Instruction: <the instruction>
Output: <the ideal answer>

Do not add commentary outside the numbered blocks.
"""

BACKTRANSLATE_INSTRUCTION = """\
Below is a passage that should be the answer to some instruction.
Write the single instruction or question it best answers. Reply with the
instruction only, no quotes, no preamble.

Passage:
{chunk}
"""

QUALITY_SCORE = """\
Rate how well this instruction/answer pair would work as supervised training
data, on a scale from 0.0 (useless) to 1.0 (excellent). Reply with the number
only.

Instruction: {instruction}
Answer: {answer}
"""

WEB_QA = """\
Using only the information in this web extract, write question/answer pairs
as a JSON array of objects with keys "instruction" and "output". Emit JSON
only.

Title: {title}
Extract:
{summary}
"""

SUMMARIZE = """\
Summarize the key facts of this page in a few sentences. Reply with the
summary only.

Title: {title}
Content:
{text}
"""

REVISE_ANSWER = """\
A user flagged this assistant answer as unsatisfactory.

Question: {question}
Original answer: {answer}
User note: {note}

Write the corrected answer the assistant should have given. Reply with the
answer only.
"""
