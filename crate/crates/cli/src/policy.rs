use serde_json::Value;

use rmdp_core::{Error, PurePolicy, Result, Rmdp};

/// Reads an agent policy from JSON: either an array of action indices in
/// state order, or an object mapping every state label to an action label
/// (or index).
pub fn parse_policy(text: &str, m: &Rmdp) -> Result<PurePolicy> {
    let value: Value = serde_json::from_str(text)?;
    let choice = match value {
        Value::Array(items) => items.iter().map(|v| action_of(v, m)).collect::<Result<Vec<_>>>()?,
        Value::Object(map) => {
            for key in map.keys() {
                if m.state_index(key).is_none() {
                    return Err(Error::IllegalPolicy(format!("unknown state {key:?}")));
                }
            }
            m.states
                .iter()
                .map(|s| {
                    map.get(s)
                        .ok_or_else(|| Error::IllegalPolicy(format!("no action for state {s:?}")))
                        .and_then(|v| action_of(v, m))
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => return Err(Error::IllegalPolicy("expected an array or an object".into())),
    };
    let policy = PurePolicy::new(choice);
    policy.check_legal(std::iter::repeat_n(m.n_actions(), m.n_states()))?;
    Ok(policy)
}

fn action_of(v: &Value, m: &Rmdp) -> Result<usize> {
    match v {
        Value::String(label) => {
            m.action_index(label).ok_or_else(|| Error::IllegalPolicy(format!("unknown action {label:?}")))
        }
        Value::Number(n) => n
            .as_u64()
            .map(|i| i as usize)
            .ok_or_else(|| Error::IllegalPolicy(format!("action index {n} is not a non-negative integer"))),
        other => Err(Error::IllegalPolicy(format!("cannot read an action from {other}"))),
    }
}
