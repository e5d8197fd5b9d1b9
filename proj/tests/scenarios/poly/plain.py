answer = 7
# plain single-language program
x = 42
y = "hi"
