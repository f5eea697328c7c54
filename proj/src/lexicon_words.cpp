#include "triage/lexicon.hpp"

namespace triage::lexicon {

// Base forms the lemmatizer may reduce to. Covers general vocabulary plus
// the fraud, hacking and abuse terms typical of complaint narratives.
const WordSet& english_base_forms() {
  static const WordSet kWords = {
    "abuse", "accept", "access", "account", "accuse", "act", "action", "activate", "activity",
    "add", "address", "admin", "administrator", "advance", "advertise", "advertisement",
    "affect", "agency", "agent", "agree", "aid", "alert", "allow", "amount", "analyse",
    "answer", "app", "appeal", "application", "apply", "approach", "approve", "area",
    "arrange", "arrest", "ask", "assault", "assist", "attach", "attack", "attempt",
    "authority", "automatic", "available", "avoid", "award", "back", "bad", "balance", "ban",
    "bank", "banking", "base", "bear", "beat", "become", "beg", "begin", "believe", "belong",
    "benefit", "bet", "betting", "bill", "bind", "bit", "blackmail", "blame", "blank", "block",
    "blog", "board", "body", "book", "boss", "bother", "box", "boy", "brand", "break", "bribe",
    "bring", "broker", "brother", "browser", "build", "bully", "burn", "business", "buy",
    "buyer", "cafe", "call", "caller", "camera", "cancel", "car", "card", "care", "carry",
    "case", "cash", "cashback", "catch", "cause", "cell", "center", "centre", "chain",
    "challenge", "chance", "change", "channel", "charge", "chat", "cheat", "cheater", "check",
    "cheque", "chief", "child", "choose", "circulate", "city", "claim", "class", "clean",
    "clear", "click", "client", "clip", "close", "cloud", "code", "coin", "collect", "college",
    "come", "comment", "commit", "company", "compensate", "complain", "complaint", "complete",
    "computer", "concern", "confirm", "confuse", "connect", "consent", "consider", "contact",
    "contain", "content", "continue", "contract", "control", "convince", "copy", "cost",
    "country", "court", "cover", "crash", "create", "credit", "crime", "criminal", "crypto",
    "currency", "customer", "cut", "cyber", "damage", "danger", "data", "date", "daughter",
    "day", "deal", "death", "debit", "debt", "deceive", "decide", "declare", "deduct",
    "defame", "delete", "deliver", "delivery", "demand", "deny", "department", "deposit",
    "describe", "design", "detail", "detect", "device", "die", "digit", "digital", "disclose",
    "discount", "display", "distribute", "doctor", "document", "dollar", "domain", "donate",
    "door", "double", "download", "draw", "drive", "drug", "due", "earn", "edit", "education",
    "email", "employ", "employee", "employer", "end", "enemy", "engage", "enter", "entry",
    "error", "escape", "event", "evidence", "exam", "exchange", "execute", "expect", "expire",
    "explain", "explicit", "exploit", "expose", "extort", "extortion", "face", "fail", "fake",
    "fall", "family", "fee", "feel", "female", "fetch", "fight", "file", "fill", "film",
    "find", "fine", "finish", "fire", "firm", "fix", "flat", "follow", "follower", "force",
    "forge", "forget", "form", "forward", "fraud", "fraudster", "free", "freeze", "friend",
    "fund", "gain", "gamble", "gambling", "game", "gang", "gateway", "generate", "get", "gift",
    "girl", "give", "go", "gold", "government", "grant", "group", "guard", "guess", "guide",
    "hack", "hacker", "hand", "handle", "hang", "happen", "harass", "harassment", "hard",
    "harm", "hate", "have", "head", "hear", "help", "hide", "hire", "hold", "holder", "home",
    "hope", "hospital", "host", "house", "hurt", "husband", "id", "identity", "ignore",
    "image", "impersonate", "inform", "information", "injure", "install", "instance", "insult",
    "insurance", "interest", "internet", "invest", "investment", "investor", "invite",
    "invoice", "involve", "issue", "item", "job", "join", "journey", "judge", "jump", "keep",
    "key", "kid", "kill", "kind", "know", "lack", "land", "laptop", "late", "launch", "law",
    "lawyer", "lead", "leak", "learn", "leave", "lend", "let", "letter", "level", "license",
    "lie", "life", "like", "limit", "link", "list", "live", "load", "loan", "lock", "log",
    "login", "look", "lose", "loss", "lottery", "love", "machine", "mail", "maintain", "make",
    "male", "malware", "man", "manage", "manager", "market", "marry", "match", "matter",
    "mean", "media", "meet", "member", "message", "method", "mistake", "misuse", "mobile",
    "mode", "money", "month", "mother", "move", "movie", "murder", "name", "need", "network",
    "new", "news", "night", "notice", "number", "object", "obscene", "obtain", "offer",
    "office", "officer", "official", "online", "open", "operate", "operator", "order",
    "organization", "organize", "own", "owner", "page", "paid", "pass", "password", "pay",
    "payment", "people", "person", "phish", "phishing", "phone", "photo", "picture", "place",
    "plan", "platform", "play", "player", "please", "plot", "police", "policy", "porn",
    "pornography", "portal", "post", "pressure", "price", "prize", "problem", "process",
    "product", "profile", "profit", "promise", "proof", "property", "protect", "provide",
    "publish", "pull", "purchase", "purpose", "push", "put", "question", "raise", "ransom",
    "ransomware", "rape", "rate", "reach", "read", "receive", "record", "recover", "refund",
    "refuse", "register", "reject", "relate", "release", "remove", "rent", "repair", "repay",
    "reply", "report", "request", "require", "rescue", "reset", "resolve", "respond", "rest",
    "return", "reveal", "reverse", "review", "reward", "ring", "risk", "rob", "robbery",
    "rule", "run", "sale", "save", "scam", "scammer", "scan", "scheme", "school", "screen",
    "search", "seize", "sell", "seller", "send", "server", "service", "session", "set",
    "share", "shop", "show", "sign", "sim", "sister", "site", "smash", "sms", "social",
    "software", "solve", "son", "speak", "spend", "spread", "start", "state", "station",
    "steal", "stock", "stop", "store", "story", "student", "submit", "subscribe", "suffer",
    "support", "suspect", "suspend", "switch", "system", "take", "talk", "target", "task",
    "tax", "team", "technology", "telegram", "tell", "term", "terror", "terrorist", "test",
    "text", "thank", "theft", "thief", "think", "threat", "threaten", "ticket", "time",
    "token", "top", "touch", "trade", "trader", "traffic", "trafficking", "train",
    "transaction", "transfer", "trap", "trick", "trust", "try", "turn", "type", "unlock",
    "update", "upi", "upload", "use", "user", "value", "verify", "victim", "video", "view",
    "viral", "visit", "voice", "wait", "walk", "wallet", "want", "warn", "warning", "watch",
    "way", "web", "website", "week", "wife", "win", "withdraw", "woman", "word", "work",
    "worker", "world", "worry", "write", "year",
  };
  return kWords;
}

}  // namespace triage::lexicon
