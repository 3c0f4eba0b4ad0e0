const ANNOTATION_TEMPLATE: &str = r#"
### Instruction:
You are a smart assistant designed to help high school teachers come up with reading comprehension questions.
Given a piece of text, you must come up with {num_qas} question and answer pairs that can be used to test a student's reading comprehension abilities.
The questions you generated should be specific to the text and should not be too general.
When coming up with question/answer pairs, you must respond in the following format:
```
[
    {
        "question": "$YOUR_QUESTION_HERE",
        "answer": "$THE_ANSWER_HERE"
    },
    {
        "question": "$YOUR_SECOND_QUESTION_HERE",
        "answer": "$THE_SECOND_ANSWER_HERE"
    }
]
```
Everything between the ``` must be valid array.

Please come up with {num_qas} question/answer pairs, in the specified JSON format, for the following text:
----------------
{text}
### Response:
"#;

/// Annotation request for one chunk of text. The text is inserted as-is.
pub fn build_annotation_prompt(text: &str, num_qas: usize) -> String {
    assert!(num_qas >= 1, "num_qas must be at least 1");
    let (head, tail) = ANNOTATION_TEMPLATE
        .split_once("{text}")
        .expect("template has a text slot");
    let n = num_qas.to_string();
    format!("{}{}{}", head.replace("{num_qas}", &n), text, tail)
}
