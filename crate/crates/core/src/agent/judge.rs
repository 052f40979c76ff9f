use super::client::{Attachment, ChatClient, ClientError, Message, ModelRequest, ModelResponse, Purpose, Role};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Judgment {
    Approve,
    Revise(String),
}

pub const UNPARSEABLE: &str = "unparseable judgment";

pub const JUDGE_INSTRUCTIONS: &str = "You compare renders of a CAD assembly with a target object. \
The first attachments show the target, the rest are the current renders. \
Reply with exactly one line: YES if the assembly looks like the target, or NO: <reason> naming what to change.";

/// `YES...` approves, `NO: reason` revises; anything else is unparseable.
pub fn parse_judgment(text: &str) -> Judgment {
    let t = text.trim();
    let upper = t.to_ascii_uppercase();
    if upper == "YES" || upper.starts_with("YES") && !upper[3..].starts_with(|c: char| c.is_ascii_alphanumeric()) {
        return Judgment::Approve;
    }
    if upper.starts_with("NO") {
        let rest = t[2..].trim_start();
        if let Some(reason) = rest.strip_prefix(':') {
            let reason = reason.trim();
            if !reason.is_empty() {
                return Judgment::Revise(reason.to_string());
            }
        }
    }
    Judgment::Revise(UNPARSEABLE.to_string())
}

pub fn judge_request(description: Option<&str>, task_images: &[Attachment], renders: &[Attachment]) -> ModelRequest {
    let mut text = String::from("Target object");
    match description {
        Some(d) => {
            text.push_str(": ");
            text.push_str(d);
        }
        None => text.push_str(" is shown in the attached images."),
    }
    text.push_str(&format!(
        "\n{} target image(s) and {} render(s) attached, in that order.",
        task_images.len(),
        renders.len()
    ));
    let mut attachments = task_images.to_vec();
    attachments.extend_from_slice(renders);
    ModelRequest {
        purpose: Purpose::Judge,
        messages: vec![
            Message::new(Role::System, JUDGE_INSTRUCTIONS),
            Message::new(Role::User, text).with_attachments(attachments),
        ],
        tools: Vec::new(),
        temperature: 0.0,
    }
}

/// One judge call; transport errors go back to the caller's retry policy.
pub fn judge(
    description: Option<&str>,
    task_images: &[Attachment],
    renders: &[Attachment],
    client: &dyn ChatClient,
) -> Result<(Judgment, ModelResponse), ClientError> {
    let resp = client.complete(&judge_request(description, task_images, renders))?;
    Ok((parse_judgment(&resp.text), resp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replies() {
        assert_eq!(parse_judgment("YES"), Judgment::Approve);
        assert_eq!(parse_judgment(" yes, looks right"), Judgment::Approve);
        assert_eq!(
            parse_judgment("NO: handles lack holes"),
            Judgment::Revise("handles lack holes".into())
        );
        assert_eq!(parse_judgment("maybe?"), Judgment::Revise(UNPARSEABLE.into()));
        assert_eq!(parse_judgment("NO"), Judgment::Revise(UNPARSEABLE.into()));
        assert_eq!(parse_judgment("YESTERDAY"), Judgment::Revise(UNPARSEABLE.into()));
        assert_eq!(parse_judgment(""), Judgment::Revise(UNPARSEABLE.into()));
    }
}
