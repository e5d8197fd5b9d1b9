# calls the leaf once
print(42)
x = polyglotEval("javascript", "leaf.js")
x
