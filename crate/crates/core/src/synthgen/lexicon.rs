//! Fixed word lists used by the dialogue templates.

/// Object nouns. First tokens are pairwise distinct.
pub const OBJECT_NOUNS: [&[&str]; 16] = [
    &["cup"],
    &["bowl"],
    &["knife"],
    &["pot"],
    &["plate"],
    &["bottle"],
    &["towel"],
    &["sponge"],
    &["spoon"],
    &["kettle"],
    &["cutting", "board"],
    &["frying", "pan"],
    &["glass"],
    &["tray"],
    &["rice", "cooker"],
    &["basket"],
];

pub const ATTRIBUTES: [&str; 7] = ["red", "blue", "white", "green", "black", "small", "big"];

/// Part nouns realized as bridging anaphors to the topic object.
pub const PARTS: [&str; 4] = ["lid", "handle", "edge", "bottom"];
pub const PART_STATES: [&str; 4] = ["dirty", "hot", "wet", "broken"];

/// Predicates taking one accusative object.
pub const ACC_PREDICATES: [&str; 6] = ["take", "wash", "open", "hold", "check", "move"];

/// Predicates with an instrument or location argument and its preposition.
pub const INS_LOC_PREDICATES: [(&str, &str); 3] = [("wipe", "with"), ("cut", "on"), ("rinse", "in")];

pub const PUT: &str = "put";
pub const INTO: &str = "into";
pub const GIVE: &str = "give";
pub const TO: &str = "to";
pub const THE: &str = "the";
pub const PRONOUN: &str = "it";
pub const MASTER: &str = "master";
pub const ROBOT: &str = "robot";
/// Marks an omitted agent that is the listener.
pub const PLEASE: &str = "please";
/// Marks an omitted agent that is the speaker.
pub const LET_ME: [&str; 2] = ["let", "me"];
pub const IS: &str = "is";
pub const ACKNOWLEDGEMENTS: [&str; 3] = ["ok", "sure", "thanks"];
