#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    Str { quote: char, triple: bool },
}

/// Removes `#` comments and blank lines from Python-like source.
///
/// String literals (including triple-quoted ones spanning lines) are left
/// untouched; an unterminated single-quoted string ends at the line break.
/// Lines that lost a trailing comment are right-trimmed.
pub fn strip_comments(source: &str) -> String {
    let chars: Vec<char> = source.chars().filter(|&c| c != '\r').collect();
    let mut kept: Vec<String> = Vec::new();
    let mut line = String::new();
    let mut had_comment = false;
    let mut starts_in_string = false;
    let mut state = State::Code;
    let mut continuation = false;

    let mut finish_line = |line: &mut String, had_comment: &mut bool, starts_in_string: bool| {
        let mut text = std::mem::take(line);
        if *had_comment {
            text.truncate(text.trim_end().len());
        }
        *had_comment = false;
        if starts_in_string || !text.trim().is_empty() {
            kept.push(text);
        }
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match state {
            State::Code => match c {
                '#' => {
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                    had_comment = true;
                    continue;
                }
                '\'' | '"' => {
                    let triple = chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                    let width = if triple { 3 } else { 1 };
                    line.extend(&chars[i..i + width]);
                    state = State::Str { quote: c, triple };
                    i += width;
                    continue;
                }
                '\n' => {
                    finish_line(&mut line, &mut had_comment, starts_in_string);
                    starts_in_string = false;
                }
                _ => line.push(c),
            },
            State::Str { quote, triple } => match c {
                '\\' => {
                    line.push(c);
                    match chars.get(i + 1) {
                        Some('\n') => continuation = true,
                        Some(&next) => {
                            line.push(next);
                            i += 1;
                        }
                        None => {}
                    }
                }
                '\n' => {
                    finish_line(&mut line, &mut had_comment, starts_in_string);
                    if triple {
                        starts_in_string = true;
                    } else {
                        // an escaped newline keeps a short string open
                        starts_in_string = continuation;
                        if !continuation {
                            state = State::Code;
                        }
                        continuation = false;
                    }
                }
                _ if c == quote => {
                    if !triple {
                        line.push(c);
                        state = State::Code;
                    } else if chars.get(i + 1) == Some(&quote) && chars.get(i + 2) == Some(&quote) {
                        line.extend([quote; 3]);
                        state = State::Code;
                        i += 3;
                        continue;
                    } else {
                        line.push(c);
                    }
                }
                _ => line.push(c),
            },
        }
        i += 1;
    }
    if !line.is_empty() || had_comment {
        finish_line(&mut line, &mut had_comment, starts_in_string);
    }
    kept.join("\n")
}
