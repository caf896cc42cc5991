#include "tunnelwatch/dataset.hpp"

namespace tunnelwatch {

const std::vector<std::string_view>& normal_wordlist() {
    static const std::vector<std::string_view> words = {
        "about", "account", "action", "active", "admin", "agent", "alpha", "amazon",
        "analytics", "android", "apple", "apps", "archive", "area", "art", "asset",
        "audio", "auth", "auto", "backup", "bank", "base", "beta", "bill",
        "blog", "blue", "board", "book", "box", "brand", "bridge", "build",
        "bus", "business", "cache", "calendar", "camera", "campus", "car", "card",
        "care", "cart", "case", "cash", "cast", "cat", "cdn", "center",
        "chat", "check", "city", "class", "clean", "client", "cloud", "club",
        "code", "coffee", "college", "color", "community", "company", "connect", "contact",
        "content", "core", "corp", "county", "craft", "credit", "cross", "cyber",
        "daily", "data", "deal", "delta", "design", "desk", "dev", "digital",
        "direct", "docs", "domain", "drive", "east", "edge", "education", "email",
        "energy", "engine", "event", "express", "fast", "feed", "file", "film",
        "finance", "fire", "first", "fitness", "flash", "flow", "food", "forum",
        "free", "fresh", "fun", "game", "garden", "gate", "global", "gold",
        "green", "group", "guide", "health", "help", "home", "host", "hotel",
        "house", "hub", "image", "info", "inside", "jobs", "journal", "key",
        "kids", "lab", "land", "law", "learn", "legal", "life", "light",
        "link", "live", "local", "login", "mail", "main", "map", "market",
        "media", "meet", "metro", "micro", "mobile", "money", "motor", "movie",
        "music", "my", "net", "network", "news", "next", "node", "north",
        "note", "office", "online", "open", "page", "park", "partner", "pay",
        "people", "phone", "photo", "pixel", "place", "plan", "play", "plus",
        "point", "portal", "post", "power", "press", "prime", "print", "pro",
        "project", "proxy", "pub", "quick", "radio", "real", "red", "remote",
        "report", "research", "resource", "review", "road", "rock", "root", "sale",
        "school", "science", "search", "secure", "server", "service", "share", "shop",
        "show", "sign", "site", "smart", "social", "soft", "solar", "sound",
        "south", "space", "sport", "stack", "star", "static", "store", "stream",
        "studio", "style", "support", "sync", "system", "talk", "team", "tech",
        "test", "time", "today", "tools", "top", "tour", "town", "track",
        "trade", "travel", "trust", "tube", "union", "update", "upload", "user",
        "valley", "video", "view", "vision", "voice", "wallet", "watch", "water",
        "wave", "web", "west", "wiki", "wind", "wire", "work", "world",
        "zone", "apex", "atlas", "beacon", "canyon", "cedar", "comet", "coral",
        "crest", "ember", "falcon", "harbor", "hawk", "island", "jade", "lotus",
        "maple", "meadow", "nova", "orbit", "pine", "quartz", "raven", "river",
        "sage", "sierra", "summit", "tiger",
    };
    return words;
}

} // namespace tunnelwatch
