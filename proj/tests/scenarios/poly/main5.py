# calls sub.js, which calls back into cb.py
print(42)
x = polyglotEval("javascript", "sub.js")
x
