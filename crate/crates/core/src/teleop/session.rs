use super::protocol::{parse_message, ClientMessage, ErrorCode, ProtocolError};

pub type ClientId = u64;

/// Controller ownership: the first client to send a valid control frame owns
/// the robot until it disconnects. Everyone else may watch but not steer.
#[derive(Debug, Default, Clone)]
pub struct Session {
    controller: Option<ClientId>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn controller(&self) -> Option<ClientId> {
        self.controller
    }

    /// Handles one inbound frame. Every frame yields either an accepted
    /// message or exactly one error to send back.
    pub fn handle_frame(&mut self, client: ClientId, text: &str) -> Result<ClientMessage, ProtocolError> {
        let msg = parse_message(text)?;
        match self.controller {
            Some(owner) if owner != client => Err(ProtocolError::new(
                ErrorCode::NotController,
                format!("client {owner} holds control"),
            )),
            _ => {
                self.controller = Some(client);
                Ok(msg)
            }
        }
    }

    /// Returns true when the departing client was the controller.
    pub fn disconnect(&mut self, client: ClientId) -> bool {
        if self.controller == Some(client) {
            self.controller = None;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORIENT: &str = r#"{"type":"orientation","roll_deg":0,"pitch_deg":-10,"yaw_deg":0,"ts_ms":1}"#;

    #[test]
    fn second_sender_is_rejected() {
        let mut s = Session::new();
        assert!(s.handle_frame(1, ORIENT).is_ok());
        assert_eq!(s.handle_frame(2, ORIENT).unwrap_err().code, ErrorCode::NotController);
        assert!(s.handle_frame(1, ORIENT).is_ok());
        assert_eq!(s.controller(), Some(1));
    }

    #[test]
    fn disconnect_releases_control() {
        let mut s = Session::new();
        s.handle_frame(1, ORIENT).unwrap();
        assert!(!s.disconnect(2));
        assert!(s.disconnect(1));
        assert_eq!(s.controller(), None);
        assert!(s.handle_frame(2, r#"{"type":"estop","engaged":false}"#).is_ok());
        assert_eq!(s.controller(), Some(2));
    }

    #[test]
    fn malformed_frames_do_not_claim_control() {
        let mut s = Session::new();
        assert_eq!(s.handle_frame(1, "garbage").unwrap_err().code, ErrorCode::BadJson);
        assert_eq!(s.controller(), None);
        s.handle_frame(2, ORIENT).unwrap();
        // parse errors take precedence over ownership errors
        assert_eq!(s.handle_frame(1, r#"{"type":"warp"}"#).unwrap_err().code, ErrorCode::UnknownType);
    }
}
