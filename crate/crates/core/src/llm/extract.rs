//! Pulling a candidate program out of a free-form reply.

use crate::program::SourceProgram;

fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(body) => blocks.push(body.join("\n") + "\n"),
                None => current = Some(Vec::new()),
            }
        } else if let Some(body) = current.as_mut() {
            body.push(line);
        }
    }
    blocks
}

fn parses(text: &str) -> Option<SourceProgram> {
    let p = SourceProgram::new("candidate", text).ok()?;
    p.parse().ok().map(|_| p)
}

/// The first fenced code block if there is one, otherwise the longest run of
/// consecutive lines that parses. `None` when neither yields a program.
pub fn extract_program(reply: &str) -> Option<SourceProgram> {
    if let Some(first) = fenced_blocks(reply).into_iter().next() {
        return parses(&first);
    }
    let lines: Vec<&str> = reply.lines().collect();
    let n = lines.len();
    for len in (1..=n).rev() {
        for start in 0..=n - len {
            let chunk = lines[start..start + len].join("\n") + "\n";
            if chunk.trim().is_empty() {
                continue;
            }
            if let Some(p) = parses(&chunk) {
                return Some(p);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_fenced_block() {
        let r =
            "Here you go:\n```c\nint a;\nint main() { return a; }\n```\nand\n```c\nint b;\n```\n";
        assert_eq!(
            extract_program(r).unwrap().text,
            "int a;\nint main() { return a; }\n"
        );
    }

    #[test]
    fn prose_only() {
        assert!(extract_program(
            "You can replace the binary operator `||` with the logical operator `&&`."
        )
        .is_none());
    }

    #[test]
    fn unfenced_code_region() {
        let r = "Sure.\nint a = 1;\nint main() { return a; }\nHope this helps.";
        assert_eq!(
            extract_program(r).unwrap().text,
            "int a = 1;\nint main() { return a; }\n"
        );
    }

    #[test]
    fn broken_fenced_block_is_none() {
        assert!(extract_program("```c\nint main( {\n```").is_none());
    }
}
